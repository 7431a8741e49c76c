#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace embseql::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("embseql_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  int call(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  // Positives contain "A B"; negatives never do.
  std::string separable_corpus() const {
    return write("train.tsv",
                 "+1\tC A B D\n+1\tA B\n+1\tD D A B\n+1\tA B C C\n"
                 "-1\tB A D\n-1\tC D\n-1\tA C B\n-1\tD B A\n");
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, NoSubcommandIsUsageError) { EXPECT_EQ(call({}), kUsage); }

TEST_F(CliTest, UnknownOptionIsUsageError) { EXPECT_EQ(call({"train", "--bogus"}), kUsage); }

TEST_F(CliTest, GroupsRadiusZeroWritesExplanatoryComment) {
  const auto emb = write("emb.txt", "A 1 0 0\nB 0.99 0.1 0\nC 0 0 1\n");
  const auto alpha = write("alpha.txt", "A B C\n");
  ASSERT_EQ(call({"groups", "--embeddings", emb, "--alphabet", alpha, "--radius", "0", "--out",
                  path("g.txt")}),
            kOk)
      << err_.str();
  const auto text = read(path("g.txt"));
  EXPECT_NE(text.find("no two symbols fall within the radius"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("g.txt.manifest.json")));
}

TEST_F(CliTest, GroupsStatsOnToyTable) {
  // A-B distance is about 0.1, A-C and B-C about 1.41.
  const auto emb = write("emb.txt", "A 1 0 0\nB 0.995 0.0998749 0\nC 0 0 1\n");
  const auto alpha = write("alpha.txt", "A B C\n");
  ASSERT_EQ(call({"groups", "--embeddings", emb, "--alphabet", alpha, "--scan", "0", "0.2", "1.5"}), kOk)
      << err_.str();
  const auto text = out_.str();
  EXPECT_NE(text.find("radius=0 groups=0 symbols_covered=0/3"), std::string::npos) << text;
  EXPECT_NE(text.find("radius=0.2 groups=1 symbols_covered=2/3 histogram=2:1"), std::string::npos) << text;
  EXPECT_NE(text.find("radius=1.5 groups=1 symbols_covered=3/3 histogram=3:1"), std::string::npos) << text;
}

TEST_F(CliTest, GroupsMissingEmbeddingsFails) {
  const auto alpha = write("alpha.txt", "A B\n");
  EXPECT_NE(call({"groups", "--embeddings", path("nope.txt"), "--alphabet", alpha, "--radius", "0.1"}), kOk);
  EXPECT_NE(err_.str().find("nope.txt"), std::string::npos);
}

TEST_F(CliTest, TrainReproducesSeparableLabels) {
  const auto data = separable_corpus();
  ASSERT_EQ(call({"train", "--input", data, "--model-out", path("m.txt"), "--max-len", "3"}), kOk)
      << err_.str();
  EXPECT_NE(out_.str().find("stop="), std::string::npos);
  const auto manifest = nlohmann::json::parse(read(path("m.txt.manifest.json")));
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_EQ(manifest["inputs"][data].get<std::string>().size(), 64u);

  ASSERT_EQ(call({"eval", "--model", path("m.txt"), "--input", data, "--out", path("p.tsv")}), kOk)
      << err_.str();
  EXPECT_NE(out_.str().find("accuracy=1.000000"), std::string::npos) << out_.str();
  const auto preds = read(path("p.tsv"));
  EXPECT_EQ(preds.rfind("#gold\tpredicted\tscore\n", 0), 0u);
}

TEST_F(CliTest, RadiusZeroGroupsMatchPlainTraining) {
  const auto data = separable_corpus();
  const auto emb = write("emb.txt", "A 1 0\nB 0 1\nC -1 0\nD 0 -1\n");
  ASSERT_EQ(call({"groups", "--embeddings", emb, "--data", data, "--radius", "0", "--out", path("g.txt")}), kOk);
  ASSERT_EQ(call({"train", "--input", data, "--model-out", path("plain.txt")}), kOk);
  ASSERT_EQ(call({"train", "--input", data, "--groups", path("g.txt"), "--model-out", path("emb.txt.model")}), kOk);
  EXPECT_EQ(read(path("plain.txt")), read(path("emb.txt.model")));
}

TEST_F(CliTest, ZeroIterationsWritesEmptyModelAndSignalsNonConvergence) {
  const auto data = separable_corpus();
  EXPECT_EQ(call({"train", "--input", data, "--model-out", path("m.txt"), "--max-iters", "0"}), kNotConverged);
  const auto text = read(path("m.txt"));
  EXPECT_NE(text.find("#target +1"), std::string::npos);
  EXPECT_EQ(text.find('\t'), std::string::npos) << text;
}

TEST_F(CliTest, TrainSingleClassIsDataError) {
  const auto data = write("one.tsv", "+1\tA B\n+1\tB\n");
  EXPECT_EQ(call({"train", "--input", data, "--model-out", path("m.txt")}), kDataError);
  EXPECT_NE(err_.str().find("degenerate"), std::string::npos);
}

TEST_F(CliTest, TrainMalformedCorpusIsParseError) {
  const auto data = write("bad.tsv", "+1\tA\n+1\t\n");
  EXPECT_EQ(call({"train", "--input", data, "--model-out", path("m.txt")}), kUsage);
  EXPECT_NE(err_.str().find(":2"), std::string::npos) << err_.str();
}

TEST_F(CliTest, EvalExcludeClassDropsRows) {
  const auto data = write("d.tsv", "X\tA\nX\tA B\nY\tB\nY\tC B\nnull\tA\n");
  ASSERT_EQ(call({"train", "--input", data, "--target", "X", "--model-out", path("x.txt")}), kOk) << err_.str();
  ASSERT_EQ(call({"train", "--input", data, "--target", "Y", "--model-out", path("y.txt")}), kOk);
  ASSERT_EQ(call({"train", "--input", data, "--target", "null", "--model-out", path("n.txt")}), kOk);
  ASSERT_EQ(call({"eval", "--model", path("x.txt"), "--model", path("y.txt"), "--model", path("n.txt"),
                  "--input", data, "--exclude-class", "null"}),
            kOk)
      << err_.str();
  EXPECT_NE(out_.str().find("evaluated=4"), std::string::npos) << out_.str();
}

TEST_F(CliTest, EvalMissingModelFails) {
  const auto data = separable_corpus();
  EXPECT_NE(call({"eval", "--model", path("missing.txt"), "--input", data}), kOk);
}

TEST_F(CliTest, PredictRejectsForeignAlphabet) {
  const auto data = separable_corpus();
  ASSERT_EQ(call({"train", "--input", data, "--model-out", path("m.txt")}), kOk);
  const auto other = write("other.tsv", "+1\tQ R\n");
  EXPECT_EQ(call({"predict", "--model", path("m.txt"), "--input", other}), kDataError);
}

TEST_F(CliTest, SfWorkedExample) {
  const auto model = write("m.txt", "#target c\n#nontarget NOT_c\n#alphabet A B\n1\tA\n-0.5\tB\n");
  const auto emb = write("emb.txt", "c 1 0\nn 0 1\nA 0.5 0.8660254037844386\nB 0 -1\n");
  ASSERT_EQ(call({"sf", "--model", model, "--embeddings", emb, "--nontarget-concept", "n"}), kOk) << err_.str();
  const auto text = out_.str();
  const auto at = text.find("sf=");
  ASSERT_NE(at, std::string::npos);
  EXPECT_NEAR(std::stod(text.substr(at + 3)), 0.5, 1e-12);
}

TEST_F(CliTest, SfAlignedModelIsOne) {
  const auto model = write("m.txt", "#target c\n#nontarget NOT_c\n#alphabet A B\n2\tA\n-1\tB\n");
  const auto emb = write("emb.txt", "c 1 0\nn 0 1\nA 2 0\nB 0 3\n");
  ASSERT_EQ(call({"sf", "--model", model, "--embeddings", emb, "--nontarget-concept", "n"}), kOk);
  EXPECT_NE(out_.str().find("sf=1\n"), std::string::npos) << out_.str();
}

TEST_F(CliTest, SfUnresolvableConceptFails) {
  const auto model = write("m.txt", "#target c\n#nontarget NOT_c\n#alphabet A\n1\tA\n");
  const auto emb = write("emb.txt", "c 1 0\nA 0 1\n");
  EXPECT_EQ(call({"sf", "--model", model, "--embeddings", emb, "--nontarget-concept", "zzz"}), kDataError);
  EXPECT_NE(err_.str().find("zzz"), std::string::npos);
}

std::string three_class_corpus() {
  std::string text;
  const char* rows[] = {"walk\tA D E", "walk\tE A", "walk\tD A D", "walk\tA",
                        "sit\tB E", "sit\tD B", "sit\tE B D", "sit\tB",
                        "run\tC D", "run\tE C", "run\tD D C", "run\tC E"};
  for (const auto* r : rows) text += std::string(r) + "\n";
  return text;
}

TEST_F(CliTest, CvIsReproducible) {
  const auto data = write("d.tsv", three_class_corpus());
  ASSERT_EQ(call({"cv", "--input", data, "--folds", "4", "--seed", "3", "--max-len", "2"}), kOk) << err_.str();
  const auto first = out_.str();
  ASSERT_EQ(call({"cv", "--input", data, "--folds", "4", "--seed", "3", "--max-len", "2", "--threads", "4"}), kOk);
  EXPECT_EQ(out_.str(), first);
  EXPECT_NE(first.find("accuracy_mean="), std::string::npos);
}

TEST_F(CliTest, CvLeaveOneOut) {
  const auto data = write("d.tsv", three_class_corpus());
  ASSERT_EQ(call({"cv", "--input", data, "--folds", "12", "--max-len", "2"}), kOk) << err_.str();
  EXPECT_NE(out_.str().find("fold=11 evaluated=1"), std::string::npos) << out_.str();
}

TEST_F(CliTest, CvSmallClassFails) {
  const auto data = write("d.tsv", three_class_corpus() + "rare\tA B\n");
  EXPECT_EQ(call({"cv", "--input", data, "--folds", "3"}), kDataError);
  EXPECT_NE(err_.str().find("rare"), std::string::npos);
}

TEST_F(CliTest, CvWithEmbeddingsReportsFidelity) {
  const auto data = write("d.tsv", three_class_corpus());
  const auto emb = write("emb.txt",
                         "walk 1 0 0\nsit 0 1 0\nrun 0 0 1\nA 1 0.1 0\nB 0 1 0.1\nC 0.1 0 1\n"
                         "D 1 1 1\nE -1 -1 -1\n");
  ASSERT_EQ(call({"cv", "--input", data, "--folds", "4", "--max-len", "1", "--embeddings", emb,
                  "--out", path("cv.txt")}),
            kOk)
      << err_.str();
  const auto text = read(path("cv.txt"));
  EXPECT_NE(text.find("class=walk sf_mean="), std::string::npos) << text;
  EXPECT_NE(text.find("\nsf_mean="), std::string::npos) << text;
  EXPECT_TRUE(fs::exists(path("cv.txt.manifest.json")));
}

TEST_F(CliTest, WindowCutsRecording) {
  const auto csv = write("rec.csv", "hand,obj,label\np,x,X\nq,x,X\nr,x,Y\ns,x,Y\nt,x,Y\n");
  ASSERT_EQ(call({"window", "--input-csv", csv, "--size", "3", "--stride", "2", "--out", path("w.tsv")}), kOk)
      << err_.str();
  EXPECT_EQ(read(path("w.tsv")), "X\tp_x q_x r_x\nY\tr_x s_x t_x\n");
  EXPECT_NE(err_.str().find("windows=2"), std::string::npos);

  ASSERT_EQ(call({"window", "--input-csv", csv, "--size", "1000", "--stride", "50"}), kOk);
  EXPECT_EQ(out_.str(), "Y\tp_x q_x r_x s_x t_x\n");

  ASSERT_EQ(call({"window", "--input-csv", csv, "--size", "3", "--stride", "2", "--drop-class", "X"}), kOk);
  EXPECT_EQ(out_.str(), "Y\tr_x s_x t_x\n");
}

}  // namespace
}  // namespace embseql::cli
