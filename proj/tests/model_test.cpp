#include "embseql/model.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "embseql/cross_validation.hpp"
#include "embseql/error.hpp"
#include "oracles.hpp"

namespace embseql {
namespace {

constexpr SymbolId A = 0, B = 1, C = 2;

KmerFeature bases(std::initializer_list<SymbolId> ids) {
  KmerFeature f;
  for (const auto id : ids) f.symbols.push_back(ExtendedSymbol::base(id));
  return f;
}

std::shared_ptr<const FeatureSpace> space3() {
  return std::make_shared<const FeatureSpace>(testing::letters(3), GroupSet{});
}

LinearModel make(std::vector<WeightedFeature> fs, std::shared_ptr<const FeatureSpace> s = space3()) {
  return LinearModel(std::move(s), std::move(fs), "+1", "-1");
}

TEST(ScoreTest, Examples) {
  EXPECT_EQ(score(make({{bases({A}), 1.0}}), {C, A}), 1.0);
  EXPECT_EQ(score(make({}), {C, A}), 0.0);
  EXPECT_EQ(score(make({{bases({A}), 2.0}, {bases({B, C}), -1.0}}), {A, B, C}), 1.0);
}

TEST(PredictTest, SignWithZeroNegative) {
  EXPECT_EQ(predict_binary(make({{bases({A}), 1.0}}), {A}), 1);
  EXPECT_EQ(predict_binary(make({{bases({A}), -0.5}}), {A}), -1);
  EXPECT_EQ(predict_binary(make({{bases({A}), 1.0}}), {B}), -1);
  EXPECT_EQ(predict_label(make({{bases({A}), 1.0}}), {B}), "-1");
}

TEST(PredictMulticlassTest, HighestScoreThenSmallestName) {
  OneVsAllModel ova;
  ova.emplace("X", LinearModel(space3(), {{bases({A}), 0.4}}, "X", "NOT_X"));
  ova.emplace("Y", LinearModel(space3(), {{bases({A}), -0.2}}, "Y", "NOT_Y"));
  EXPECT_EQ(predict_multiclass(ova, {A}), "X");
  EXPECT_EQ(predict_multiclass(ova, {B}), "X");  // both 0

  OneVsAllModel tie;
  tie.emplace("Q", LinearModel(space3(), {{bases({A}), 1.0}}, "Q", "NOT_Q"));
  tie.emplace("P", LinearModel(space3(), {{bases({A}), 1.0}}, "P", "NOT_P"));
  EXPECT_EQ(predict_multiclass(tie, {A}), "P");

  OneVsAllModel single;
  single.emplace("Z", LinearModel(space3(), {{bases({A}), -3.0}}, "Z", "NOT_Z"));
  EXPECT_EQ(predict_multiclass(single, {A}), "Z");
}

TEST(LinearModelTest, CanonicalOrderAndValidation) {
  const auto m = make({{bases({B}), 0.5}, {bases({A, B}), -2.0}, {bases({C}), 0.5}, {bases({A}), 0.5}});
  ASSERT_EQ(m.features().size(), 4u);
  EXPECT_EQ(m.features()[0].feature, bases({A, B}));
  EXPECT_EQ(m.features()[1].feature, bases({A}));
  EXPECT_EQ(m.features()[2].feature, bases({B}));
  EXPECT_EQ(m.features()[3].feature, bases({C}));
  EXPECT_THROW(make({{bases({A}), 0.0}}), DataError);
  EXPECT_THROW(make({{bases({A}), 1.0}, {bases({A}), 2.0}}), DataError);
  EXPECT_THROW(make({{KmerFeature{}, 1.0}}), DataError);
}

TEST(LinearModelTest, ScoreIsLinear) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(-3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<WeightedFeature> fs{{bases({A}), w(rng)}, {bases({B, C}), w(rng)}, {bases({C}), w(rng)}};
    std::vector<WeightedFeature> doubled = fs;
    std::vector<WeightedFeature> scaled = fs;
    const double k = 0.1 + std::abs(w(rng));
    for (auto& f : doubled) f.weight *= 2;
    for (auto& f : scaled) f.weight *= k;
    Sequence seq(1 + rng() % 6);
    for (auto& s : seq) s = static_cast<SymbolId>(rng() % 3);
    EXPECT_EQ(score(make(doubled), seq), 2 * score(make(fs), seq));
    if (score(make(fs), seq) != 0) {
      EXPECT_EQ(predict_binary(make(scaled), seq), predict_binary(make(fs), seq));
    }
  }
}

TEST(EvaluateTest, ExcludedClassExample) {
  const auto r = evaluate({"X", "Y", "Y", "X"}, {"X", "X", "Y", "null"}, std::string("null"));
  EXPECT_EQ(r.evaluated, 3u);
  EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 3);
  ASSERT_EQ(r.per_class.size(), 2u);
  EXPECT_EQ(r.per_class[0].label, "X");
  EXPECT_DOUBLE_EQ(r.per_class[0].f1, 2.0 / 3);
  EXPECT_DOUBLE_EQ(r.per_class[1].f1, 2.0 / 3);
  EXPECT_DOUBLE_EQ(r.weighted_f1, 2.0 / 3);
  EXPECT_EQ(r.confusion[0][1], 1u);
}

TEST(EvaluateTest, PerfectAndAllWrong) {
  const auto perfect = evaluate({"X", "Y"}, {"X", "Y"});
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.weighted_f1, 1.0);
  const auto wrong = evaluate({"Y", "X"}, {"X", "Y"});
  EXPECT_EQ(wrong.accuracy, 0.0);
  EXPECT_EQ(wrong.weighted_f1, 0.0);
}

TEST(EvaluateTest, LengthMismatchIsAnError) {
  EXPECT_THROW(evaluate({"X"}, {"X", "Y"}), DataError);
}

TEST(EvaluateTest, Properties) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    std::vector<std::string> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = std::string(1, static_cast<char>('a' + rng() % 3));
      gold[i] = std::string(1, static_cast<char>('a' + rng() % 3));
    }
    const auto r = evaluate(pred, gold);
    EXPECT_GE(r.weighted_f1, 0.0);
    EXPECT_LE(r.weighted_f1, 1.0);
    const auto absent = evaluate(pred, gold, std::string("zz"));
    EXPECT_EQ(absent.accuracy, r.accuracy);
    EXPECT_EQ(absent.weighted_f1, r.weighted_f1);
  }
}

TEST(EvaluateTest, BalancedBinaryWeightedF1IsMeanF1) {
  const auto r = evaluate({"P", "P", "N", "P"}, {"P", "N", "N", "P"});
  EXPECT_DOUBLE_EQ(r.weighted_f1, (r.per_class[0].f1 + r.per_class[1].f1) / 2);
}

TEST(ModelFileTest, RoundTripPreservesScoresBitForBit) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = testing::random_instance(rng);
    const auto features = testing::enumerate_features(inst.data, *inst.space, inst.max_len);
    std::vector<WeightedFeature> fs;
    std::normal_distribution<double> w(0, 1);
    for (const auto& [f, d] : features) {
      if (rng() % 3 == 0) fs.push_back({f, w(rng)});
    }
    const LinearModel m(inst.space, fs, "+1", "-1");
    std::ostringstream out;
    write_model(out, m);
    std::istringstream in(out.str());
    const auto back = read_model(in, "model");
    std::ostringstream again;
    write_model(again, back);
    EXPECT_EQ(again.str(), out.str());
    for (const auto& seq : inst.data.sequences) EXPECT_EQ(score(back, seq), score(m, seq));
    EXPECT_EQ(back.target_class(), "+1");
    EXPECT_EQ(back.nontarget_label(), "-1");
  }
}

TEST(ModelFileTest, WildcardAndGroupsSurvive) {
  const auto a = testing::letters(3);
  auto space = std::make_shared<const FeatureSpace>(a, GroupSet({make_group({A, B}, a)}), true);
  const LinearModel m(space,
                      {{KmerFeature{{ExtendedSymbol::group(0), ExtendedSymbol::base(C)}}, 1.5},
                       {KmerFeature{{ExtendedSymbol::base(A), ExtendedSymbol::group(1)}}, -0.25}},
                      "X", "NOT_X");
  std::ostringstream out;
  write_model(out, m);
  EXPECT_NE(out.str().find("(A|B) C"), std::string::npos);
  EXPECT_NE(out.str().find("A *"), std::string::npos);
  std::istringstream in(out.str());
  const auto back = read_model(in, "model");
  for (const Sequence& s : {Sequence{A, C}, Sequence{B, C}, Sequence{A, A}, Sequence{C, A}}) {
    EXPECT_EQ(score(back, s), score(m, s));
  }
}

TEST(ModelFileTest, MalformedWeightIsAParseError) {
  std::istringstream in("#target +1\n#nontarget -1\n#alphabet A B\nabc\tA\n");
  try {
    read_model(in, "model");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(ModelFileTest, UnknownSymbolIsADataError) {
  std::istringstream in("#target +1\n#nontarget -1\n#alphabet A B\n1\tQ\n");
  EXPECT_THROW(read_model(in, "model"), DataError);
}

TEST(ModelFileTest, OrderingIsStable) {
  const std::vector<WeightedFeature> fs{{bases({C}), 1.0}, {bases({A}), 1.0}, {bases({B}), -1.0}};
  std::ostringstream first;
  write_model(first, make(fs));
  std::vector<WeightedFeature> reversed(fs.rbegin(), fs.rend());
  std::ostringstream second;
  write_model(second, make(reversed));
  EXPECT_EQ(first.str(), second.str());
}

SequenceDataset labeled(const std::vector<std::pair<std::string, std::size_t>>& counts) {
  SequenceDataset ds;
  ds.alphabet = testing::letters(3);
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) ds.items.push_back({{static_cast<SymbolId>(i % 3)}, label});
  }
  ds.refresh_classes();
  return ds;
}

TEST(StratifiedFoldsTest, PartitionDeterminismAndBalance) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t folds = 2 + rng() % 5;
    std::vector<std::pair<std::string, std::size_t>> counts;
    const std::size_t classes = 2 + rng() % 3;
    for (std::size_t c = 0; c < classes; ++c) counts.push_back({"c" + std::to_string(c), folds + rng() % 20});
    const auto ds = labeled(counts);
    const auto split = stratified_folds(ds, folds, trial);
    ASSERT_EQ(split.size(), folds);
    EXPECT_EQ(split, stratified_folds(ds, folds, trial));

    std::multiset<std::size_t> all;
    for (const auto& f : split) all.insert(f.begin(), f.end());
    EXPECT_EQ(all.size(), ds.items.size());
    EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), ds.items.size());

    for (const auto& [label, n] : counts) {
      for (const auto& f : split) {
        std::size_t in_fold = 0;
        for (const auto i : f) in_fold += ds.items[i].label == label;
        const double expected = static_cast<double>(n) / folds;
        EXPECT_LE(std::abs(static_cast<double>(in_fold) - expected), 1.0);
      }
    }
  }
}

TEST(StratifiedFoldsTest, SmallClassIsNamed) {
  try {
    stratified_folds(labeled({{"big", 10}, {"tiny", 2}}), 3, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("tiny"), std::string::npos);
  }
}

TEST(StratifiedFoldsTest, LeaveOneOut) {
  const auto split = stratified_folds(labeled({{"a", 3}, {"b", 2}}), 5, 1);
  ASSERT_EQ(split.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(split[k], (std::vector<std::size_t>{k}));
}

TEST(MeanStdTest, SampleStandardDeviation) {
  const auto ms = mean_std({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_DOUBLE_EQ(ms.std, std::sqrt(5.0 / 3));
  EXPECT_EQ(mean_std({7}).std, 0.0);
}

SequenceDataset three_class_corpus(std::mt19937_64& rng) {
  SequenceDataset ds;
  for (const auto* s : {"A", "B", "C", "D", "E"}) ds.alphabet.intern(s);
  const std::vector<std::string> labels{"walk", "sit", "run"};
  for (std::size_t i = 0; i < 30; ++i) {
    const std::size_t cls = i % 3;
    Sequence seq;
    for (std::size_t j = 0; j < 4; ++j) seq.push_back(static_cast<SymbolId>(3 + rng() % 2));
    seq[rng() % 4] = static_cast<SymbolId>(cls);
    ds.items.push_back({seq, labels[cls]});
  }
  ds.refresh_classes();
  return ds;
}

TEST(CrossValidateTest, SeparableCorpusIsPredictedWell) {
  std::mt19937_64 rng(10);
  const auto ds = three_class_corpus(rng);
  LearnerConfig config;
  config.max_len = 2;
  CvOptions options;
  options.folds = 5;
  const auto report = cross_validate(ds, config, options);
  EXPECT_EQ(report.per_fold.size(), 5u);
  EXPECT_EQ(report.accuracy.mean, 1.0);
  EXPECT_EQ(report.accuracy.std, 0.0);
}

TEST(CrossValidateTest, ThreadsDoNotChangeReport) {
  std::mt19937_64 rng(11);
  const auto ds = three_class_corpus(rng);
  LearnerConfig config;
  config.max_len = 2;
  CvOptions options;
  options.folds = 3;
  std::ostringstream a, b;
  write_cv_report(a, cross_validate(ds, config, options));
  options.threads = 3;
  write_cv_report(b, cross_validate(ds, config, options));
  EXPECT_EQ(a.str(), b.str());
}

TEST(FidelityConfigForTest, CentroidOfOtherClassesByDefault) {
  FidelitySetup setup;
  setup.class_concepts = {{"walk", "walking"}};
  const auto cfg = fidelity_config_for("sit", {"walk", "sit", "run"}, setup);
  EXPECT_EQ(cfg.target_concept, "sit");
  EXPECT_EQ(cfg.nontarget_concepts, (std::vector<std::string>{"walking", "run"}));
  setup.nontarget_concept = "other";
  EXPECT_EQ(fidelity_config_for("sit", {"walk", "sit"}, setup).nontarget_concepts,
            (std::vector<std::string>{"other"}));
}

}  // namespace
}  // namespace embseql
