#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>

#include "owf/classifiers.hpp"
#include "owf/rng.hpp"
#include "owf/synth.hpp"

using namespace owf;

namespace {

PacketSequence from_gaps(const std::vector<double>& gaps, const std::vector<int>& dirs) {
  PacketSequence seq;
  double t = 0.0;
  for (size_t i = 0; i < gaps.size(); ++i) {
    t += gaps[i];
    seq.cells.push_back(Cell{t, static_cast<int8_t>(dirs[i])});
  }
  double t0 = seq.cells[0].time;
  for (auto& c : seq.cells) c.time -= t0;
  return seq;
}

ClassifierConfig fast_config(uint64_t seed = 1) {
  ClassifierConfig cfg;
  cfg.forest_trees = 60;
  cfg.pasvm_gamma = 1e-4;
  cfg.pacumul_gamma = 1e-4;
  cfg.seed = seed;
  cfg.threads = 2;
  return cfg;
}

// Four distinct trace shapes, each repeated per class: zero within-class
// variance, every engine must hit 100% training accuracy.
Dataset zero_variance_dataset() {
  Dataset data;
  std::vector<std::vector<int>> dir_patterns = {
      {1, -1, -1, 1, 1, 1, -1, -1, 1, -1},
      {-1, -1, 1, 1, -1, -1, 1, 1, -1, -1, 1, 1},
      {1, 1, 1, 1, -1, 1, 1, 1, -1, -1, -1, -1, -1, 1},
      {-1, 1, -1, 1, -1, 1, -1, 1, 1, 1},
  };
  std::vector<double> base_gap = {0.0, 0.01, 0.02, 0.01, 0.04, 0.01, 0.02,
                                  0.03, 0.01, 0.05, 0.01, 0.02, 0.01, 0.03};
  for (int c = 0; c < 4; ++c) {
    const auto& dirs = dir_patterns[static_cast<size_t>(c)];
    std::vector<double> gaps(base_gap.begin(), base_gap.begin() + static_cast<long>(dirs.size()));
    for (auto& g : gaps) g *= 1.0 + 0.5 * c;  // distinct timing per class
    for (int i = 0; i < 3; ++i)
      data.monitored[c].push_back(from_gaps(gaps, dirs));
  }
  // Distinct background traces.
  Rng rng(77);
  for (int u = 0; u < 6; ++u) {
    std::vector<int> dirs;
    std::vector<double> gaps;
    for (int i = 0; i < 20 + u; ++i) {
      dirs.push_back(rng.bernoulli(0.5) ? 1 : -1);
      gaps.push_back(rng.uniform(0.001, 0.1));
    }
    gaps[0] = 0.0;
    data.unmonitored.push_back(from_gaps(gaps, dirs));
  }
  return data;
}

}  // namespace

TEST_CASE("bixcor template is the element-wise mean") {
  Dataset data;
  data.monitored[0].push_back(from_gaps({0.0, 1.0, 1.0}, {1, -1, 1}));
  data.monitored[0].push_back(from_gaps({0.0, 3.0, 1.0}, {1, 1, 1}));
  data.monitored[1].push_back(from_gaps({0.0, 0.5, 0.25}, {-1, -1, 1}));
  TrainedModel model = train(ClassifierKind::BI_XCOR, data, fast_config());
  // Probe indirectly: a trace with interpacket times (0,2,1) correlates
  // perfectly with class 0's template times.
  PacketSequence probe = from_gaps({0.0, 2.0, 1.0}, {1, -1, 1});
  MatchVector mv = model.match(probe);
  REQUIRE(mv.scores.size() == 2);
  XCorrRepr pr = repr_xcorr(probe);
  // X_t(probe, template) == 1 exactly when the template times are (0,2,1).
  CHECK(mv.scores[0] >= 1.0);
  CHECK(mv.scores[0] > mv.scores[1]);
}

TEST_CASE("svm machine count is choose(roster, 2)") {
  DatasetSpec spec;
  spec.n_monitored = 100;
  spec.n_instances = 2;
  spec.n_unmonitored = 4;
  Dataset data = synth_dataset(spec, 5);
  ClassifierConfig cfg = fast_config();
  TrainedModel model = train(ClassifierKind::PA_SVM, data, cfg);
  REQUIRE(model.roster().size() == 101);

  // Vote conservation: every pair votes exactly once.
  PacketSequence probe = data.unmonitored[0];
  MatchVector mv = model.match(probe);
  double sum = 0.0;
  for (double s : mv.scores) sum += s;
  CHECK(sum == 5050.0);
}

TEST_CASE("hakfp leaf fractions sum to the tree count") {
  Dataset data = synth_dataset(parse_spec("5x8+40"), 3);
  ClassifierConfig cfg = fast_config();
  cfg.forest_trees = 101;
  TrainedModel model = train(ClassifierKind::HA_KFP, data, cfg);
  for (const auto& t : data.unmonitored) {
    MatchVector mv = model.match(t);
    double sum = 0.0;
    for (double s : mv.scores) sum += s;
    CHECK(sum == 101.0);  // exact: grown to purity
  }
}

TEST_CASE("hakfp separates toy blobs at training time") {
  Dataset data = zero_variance_dataset();
  TrainedModel model = train(ClassifierKind::HA_KFP, data, fast_config());
  for (const auto& [page, traces] : data.monitored)
    for (const auto& t : traces)
      CHECK(model.classify_baseline(t) == Label::monitored(page));
}

TEST_CASE("every engine hits 100% training accuracy on zero-variance clusters") {
  Dataset data = zero_variance_dataset();
  for (ClassifierKind kind :
       {ClassifierKind::BI_XCOR, ClassifierKind::PA_SVM, ClassifierKind::CA_OSAD,
        ClassifierKind::WA_KNN, ClassifierKind::HA_KFP, ClassifierKind::PA_CUMUL}) {
    ClassifierConfig cfg = fast_config();
    cfg.pasvm_gamma = 0.05;  // toy feature scale
    cfg.pacumul_gamma = 0.05;
    TrainedModel model = train(kind, data, cfg);
    for (const auto& [page, traces] : data.monitored)
      for (const auto& t : traces) {
        CHECK(model.classify_baseline(t) == Label::monitored(page));
      }
  }
}

TEST_CASE("waknn match is zero on its own training instance") {
  Dataset data = synth_dataset(parse_spec("3x5+10"), 21);
  TrainedModel model = train(ClassifierKind::WA_KNN, data, fast_config());
  const PacketSequence& t = data.monitored.at(1)[2];
  MatchVector mv = model.match(t);
  size_t best = argmax_index(mv);
  CHECK(model.roster()[best] == Label::monitored(1));
  CHECK(mv.scores[best] == 0.0);  // negated zero distance
}

TEST_CASE("waknn on a background training trace classifies non-monitored") {
  Dataset data = synth_dataset(parse_spec("3x5+10"), 22);
  TrainedModel model = train(ClassifierKind::WA_KNN, data, fast_config());
  MatchVector mv = model.match(data.unmonitored[4]);
  CHECK(model.roster()[argmax_index(mv)] == Label::non_monitored());
}

TEST_CASE("match vectors are reproducible and models immutable in use") {
  Dataset data = synth_dataset(parse_spec("4x6+20"), 8);
  for (ClassifierKind kind : {ClassifierKind::BI_XCOR, ClassifierKind::WA_KNN,
                              ClassifierKind::HA_KFP, ClassifierKind::PA_CUMUL}) {
    TrainedModel model = train(kind, data, fast_config());
    MatchVector a = model.match(data.unmonitored[0]);
    MatchVector b = model.match(data.unmonitored[0]);
    CHECK(a.scores == b.scores);
  }
}

TEST_CASE("training is schedule-independent") {
  Dataset data = synth_dataset(parse_spec("4x6+20"), 8);
  for (ClassifierKind kind : {ClassifierKind::HA_KFP, ClassifierKind::PA_SVM}) {
    ClassifierConfig one = fast_config();
    one.threads = 1;
    ClassifierConfig two = fast_config();
    two.threads = 2;
    TrainedModel m1 = train(kind, data, one);
    TrainedModel m2 = train(kind, data, two);
    for (const auto& t : data.unmonitored) {
      MatchVector a = m1.match(t);
      MatchVector b = m2.match(t);
      REQUIRE(a.scores.size() == b.scores.size());
      for (size_t i = 0; i < a.scores.size(); ++i)
        CHECK(a.scores[i] == doctest::Approx(b.scores[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("argmax ties break to the lowest page, non-monitored last") {
  MatchVector mv;
  mv.scores = {0.5, 0.5, 0.5};
  CHECK(argmax_index(mv) == 0);
  auto order = ranked_order(mv);
  CHECK(order == std::vector<size_t>{0, 1, 2});
  mv.scores = {0.1, 0.5, 0.5};
  CHECK(argmax_index(mv) == 1);
}

TEST_CASE("argmax label is invariant under increasing affine transforms") {
  Rng rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    MatchVector mv;
    size_t n = 2 + rng.index(20);
    for (size_t i = 0; i < n; ++i)
      mv.scores.push_back(rng.uniform(-5.0, 5.0));
    if (rng.bernoulli(0.3)) mv.scores[rng.index(n)] = mv.scores[0];  // force ties sometimes
    double a = rng.uniform(0.01, 10.0);
    double b = rng.uniform(-20.0, 20.0);
    MatchVector mapped;
    for (double s : mv.scores) mapped.scores.push_back(a * s + b);
    CHECK(argmax_index(mapped) == argmax_index(mv));
    CHECK(ranked_order(mapped) == ranked_order(mv));
  }
}

TEST_CASE("learn_weights damps uninformative features") {
  Rng rng(4);
  std::vector<FeatureVector> features;
  std::vector<int32_t> classes;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 20; ++i) {
      FeatureVector f;
      f.values = {static_cast<double>(c), rng.uniform(0.0, 10.0)};
      features.push_back(f);
      classes.push_back(c);
    }
  }
  auto w = learn_weights(features, classes, 3, 5, 0.05, 9);
  REQUIRE(w.size() == 2);
  CHECK(w[0] > w[1]);  // separating feature keeps more weight than noise
  double sum = w[0] + w[1];
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-9));  // renormalized to |F|

  auto no_op = learn_weights(features, classes, 3, 5, 0.0, 9);
  CHECK(no_op == std::vector<double>{1.0, 1.0});

  auto again = learn_weights(features, classes, 3, 5, 0.05, 9);
  CHECK(w == again);  // same seed, same weights
}

TEST_CASE("models serialize and round-trip bit-exact match vectors") {
  namespace fs = std::filesystem;
  Dataset data = synth_dataset(parse_spec("4x5+15"), 99);
  for (ClassifierKind kind :
       {ClassifierKind::BI_XCOR, ClassifierKind::PA_SVM, ClassifierKind::CA_OSAD,
        ClassifierKind::WA_KNN, ClassifierKind::HA_KFP, ClassifierKind::PA_CUMUL}) {
    ClassifierConfig cfg = fast_config();
    cfg.forest_trees = 30;
    TrainedModel model = train(kind, data, cfg);
    fs::path path = fs::temp_directory_path() /
                    ("owf_model_" + std::string(classifier_kind_name(kind)) + ".bin");
    model.save(path.string());
    TrainedModel back = TrainedModel::load(path.string());
    CHECK(back.kind() == model.kind());
    CHECK(back.roster() == model.roster());
    CHECK(back.config_digest() == model.config_digest());
    for (const auto& t : data.unmonitored) {
      MatchVector a = model.match(t);
      MatchVector b = back.match(t);
      CHECK(a.scores == b.scores);
    }
    fs::remove(path);
  }
}

TEST_CASE("svm training requires two classes") {
  Dataset data;
  data.monitored[0].push_back(from_gaps({0.0, 0.1}, {1, -1}));
  CHECK_THROWS(train(ClassifierKind::PA_SVM, data, fast_config()));
}

TEST_CASE("an unseparable class pair is flagged, not fatal") {
  // Classes 0 and 1 hold literally identical traces; their pair machine has
  // nothing to separate. The model must still train and score.
  Dataset data = zero_variance_dataset();
  data.monitored[1] = data.monitored[0];
  ClassifierConfig cfg = fast_config();
  cfg.pasvm_gamma = 0.05;
  TrainedModel model = train(ClassifierKind::PA_SVM, data, cfg);
  CHECK(model.flagged_machine_count() >= 1);
  MatchVector mv = model.match(data.monitored.at(2)[0]);
  double sum = 0.0;
  for (double s : mv.scores) sum += s;
  CHECK(sum == static_cast<double>(mv.scores.size() * (mv.scores.size() - 1) / 2));
}

TEST_CASE("smo solution satisfies the KKT conditions on random rbf kernels") {
  Rng rng(0x5400);
  for (int trial = 0; trial < 25; ++trial) {
    size_t n = 8 + rng.index(24);
    std::vector<std::array<double, 2>> pts(n);
    std::vector<int8_t> labels(n);
    for (size_t i = 0; i < n; ++i) {
      bool pos = i < n / 2;
      labels[i] = pos ? 1 : -1;
      // Two overlapping blobs: some trials are not separable.
      double cx = pos ? 0.0 : rng.uniform(0.5, 2.0);
      pts[i] = {cx + rng.normal(0.0, 0.6), rng.normal(0.0, 0.6)};
    }
    std::vector<float> gram(n * n);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
        gram[i * n + j] = static_cast<float>(std::exp(-0.5 * (dx * dx + dy * dy)));
      }
    SvmConfig cfg;
    cfg.cost = 10.0;
    cfg.tolerance = 1e-4;
    BinarySvm machine = train_binary_svm(KernelView(gram.data(), n), labels, cfg);

    std::vector<double> alpha(n, 0.0);
    for (size_t k = 0; k < machine.sv_indices.size(); ++k)
      alpha[static_cast<size_t>(machine.sv_indices[k])] =
          machine.sv_coef[k] * labels[static_cast<size_t>(machine.sv_indices[k])];
    std::vector<double> row(n);
    const double slack = 0.02;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) row[j] = gram[j * n + i];
      double margin = labels[i] * machine.decide(row);
      if (alpha[i] < 1e-9) {
        CHECK(margin >= 1.0 - slack);
      } else if (alpha[i] > cfg.cost - 1e-9) {
        CHECK(margin <= 1.0 + slack);
      } else {
        CHECK(margin == doctest::Approx(1.0).epsilon(slack));
      }
    }
  }
}

TEST_CASE("dataset-level weight learning is deterministic") {
  Dataset data = synth_dataset(parse_spec("3x6+12"), 44);
  auto w1 = learn_weights(data, 2, 3, 0.02, 7);
  auto w2 = learn_weights(data, 2, 3, 0.02, 7);
  CHECK(w1 == w2);
  CHECK(w1.size() == catalog_length(FeatureCatalog::WA_KNN));
}
