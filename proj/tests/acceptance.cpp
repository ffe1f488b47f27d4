// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier end-to-end runs live at the end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "owf/defenses.hpp"
#include "owf/harness.hpp"
#include "owf/kernels.hpp"
#include "owf/metrics.hpp"
#include "owf/rng.hpp"

using namespace owf;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

void require_close(double got, double want, double tol, const std::string& what) {
  if (!(std::fabs(got - want) <= tol)) {
    std::ostringstream ss;
    ss << what << ": got " << got << ", want " << want << " +/- " << tol;
    throw CheckFailure(ss.str());
  }
}

int g_failures = 0;

void criterion(int id, const std::string& name, const std::function<void()>& body) {
  auto start = std::chrono::steady_clock::now();
  try {
    body();
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[PASS] criterion %2d: %s (%.1fs)\n", id, name.c_str(), secs);
  } catch (const std::exception& e) {
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[FAIL] criterion %2d: %s (%.1fs)\n         %s\n", id, name.c_str(), secs,
                e.what());
    ++g_failures;
  }
  std::fflush(stdout);
}

const SweepRow* find_row(const SweepResult& res, const std::string& classifier,
                         const std::string& po, const std::string& params) {
  for (const auto& row : res.rows)
    if (row.classifier == classifier && row.po == po && row.params == params) return &row;
  return nullptr;
}

double lower_of(const SweepRow& row, double r) {
  PrecisionEstimate est = precision_estimate(row.counts, r);
  return est.lower.value_or(-1.0);
}

// --- criteria ------------------------------------------------------------------

void metric_worked_example() {
  double pi = r_precision(0.36, 0.0, 0.00004, 1000.0).value();
  require_close(pi, 0.90, 0.005, "pi_1000 point");

  double tp_half = wald_halfwidth(0.36, 50000);
  require_close(0.36 - tp_half, 0.356, 5e-4, "R_TP^min");
  require_close(0.36 + tp_half, 0.364, 5e-4, "R_TP^max");
  require_close(wilson_upper(0.00004, 50000), 0.00015, 1e-5, "R_FP^max");

  ConfusionCounts c;
  c.n_p = 50000;
  c.n_n = 50000;
  c.n_tp = 18000;
  c.n_wp = 0;
  c.n_fp = 2;
  PrecisionEstimate est = precision_estimate(c, 1000.0);
  require(est.method == IntervalMethod::WILSON, "method must be Wilson for N_FP < 10");
  require(est.lower.has_value(), "Wilson lower bound present");
  require_close(*est.lower, 0.70, 0.01, "Wilson lower bound");
}

void metric_anchor_points() {
  ConfusionCounts c;
  c.n_p = 50000;
  c.n_n = 50000;
  c.n_tp = 15900;  // 0.318
  c.n_wp = 70;     // 0.0014
  c.n_fp = 0;
  PrecisionEstimate est = precision_estimate(c, 1000.0);
  require(est.method == IntervalMethod::WILSON, "Wilson at zero FPs");
  require_close(est.lower.value(), 0.78, 0.01, "optimum anchor");

  auto curve = bound_curve({1.0}, 50000, 50000, 1000.0);
  require_close(curve[0].second, 0.93, 0.01, "perfect-recall anchor");
  curve = bound_curve({0.4}, 50000, 50000, 1000.0);
  require_close(curve[0].second, 0.82, 0.01, "R_TP=0.4 anchor");
  curve = bound_curve({0.2}, 50000, 100000, 1000.0);
  require_close(curve[0].second, 0.81, 0.01, "larger-world anchor");
  curve = bound_curve({0.2}, 50000, 50000, 1000.0);
  require_close(curve[0].second, 0.70, 0.01, "R_TP=0.2 anchor");
}

void alpha_invariance() {
  Rng rng(0xa1fa);
  std::vector<double> alphas;
  for (int i = 1; i <= 10; ++i) alphas.push_back(0.1 * i);
  for (int trial = 0; trial < 1000; ++trial) {
    double tp = rng.uniform(1e-9, 1.0);
    double wp = rng.uniform(0.0, 1.0);
    double fp = rng.uniform(0.0, 1.0);
    double r = rng.uniform(0.0, 5000.0);
    double base = r_precision(tp, wp, fp, r).value();
    for (double alpha : alphas) {
      double scaled = r_precision(alpha * tp, alpha * wp, alpha * fp, r).value();
      double rel = std::fabs(scaled - base) / std::max(1e-300, std::fabs(base));
      require(rel <= 1e-12, "alpha-invariance at alpha=" + std::to_string(alpha));
    }
  }
}

void monotonicity_suites() {
  ExperimentConfig cfg;
  cfg.dataset_source = "synth:20x20+500";
  cfg.folds = 2;
  cfg.seed = 20500;
  cfg.threads = 2;
  cfg.classifiers = {ClassifierKind::BI_XCOR, ClassifierKind::WA_KNN, ClassifierKind::HA_KFP};
  cfg.classifier.forest_trees = 300;
  cfg.po_confidence_k = {1, 2};
  cfg.po_confidence_m = {0.2, 0.4, 0.6, 0.8, 0.9, 1.0};
  cfg.po_toofar_m = {0.5, 0.925, 1.5, 2.5, 4.0};
  cfg.po_distance_kinds = {DistanceKindId::XCORR};
  cfg.ensemble_subsets = true;
  SweepResult res = run_experiment(cfg);

  auto fmt = [](double v) {
    char buf[40];
    snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };

  for (const char* name : {"bixcor", "waknn", "hakfp"}) {
    for (int k : {1, 2}) {
      double prev_fpr = -1.0, prev_tpr = -1.0;
      for (double m : cfg.po_confidence_m) {  // ascending M
        const SweepRow* row =
            find_row(res, name, "confidence", "K=" + std::to_string(k) + ";M=" + fmt(m));
        require(row != nullptr, "confidence row missing");
        Rates rt = row->rates_of();
        require(rt.r_fp >= prev_fpr - 1e-15, "FPR must not rise as M_match falls");
        require(rt.r_tp >= prev_tpr - 1e-15, "TPR must not rise as M_match falls");
        prev_fpr = rt.r_fp;
        prev_tpr = rt.r_tp;
      }
    }
    double prev_fpr = -1.0, prev_tpr = -1.0;
    for (double m : cfg.po_toofar_m) {  // ascending M
      const SweepRow* row =
          find_row(res, name, "toofar", "dist=xcorr;M=" + fmt(m) + ";variant=1");
      require(row != nullptr, "toofar row missing");
      Rates rt = row->rates_of();
      require(rt.r_fp >= prev_fpr - 1e-15, "FPR must not rise as too-far M falls");
      require(rt.r_tp >= prev_tpr - 1e-15, "TPR must not rise as too-far M falls");
      prev_fpr = rt.r_fp;
      prev_tpr = rt.r_tp;
    }
  }

  // Unanimous subsets: adding a classifier never adds positives.
  auto positives = [&](const std::string& name) -> int64_t {
    const SweepRow* row = find_row(res, name, "unanimous", "-");
    require(row != nullptr, "ensemble row missing: " + name);
    return row->counts.n_tp + row->counts.n_wp + row->counts.n_fp;
  };
  struct Pair {
    const char* smaller;
    const char* larger;
  };
  for (const Pair& p : {Pair{"ens[bixcor]", "ens[bixcor+waknn]"},
                        Pair{"ens[waknn]", "ens[bixcor+waknn]"},
                        Pair{"ens[hakfp]", "ens[waknn+hakfp]"},
                        Pair{"ens[bixcor+waknn]", "ens[bixcor+waknn+hakfp]"},
                        Pair{"ens[waknn+hakfp]", "ens[bixcor+waknn+hakfp]"}}) {
    require(positives(p.larger) <= positives(p.smaller),
            std::string("adding a classifier added positives: ") + p.larger);
  }
}

void osa_oracle() {
  Rng rng(0x05a);
  auto random_string = [&](size_t len) {
    std::string s(len, 'O');
    for (auto& ch : s) ch = rng.bernoulli(0.5) ? 'O' : 'I';
    return s;
  };
  for (int trial = 0; trial < 10000; ++trial) {
    std::string a = random_string(rng.index(7));
    std::string b = random_string(rng.index(7));
    int64_t dp = osa(a, b);
    int brute = oracles::osa_bruteforce(a, b);
    if (dp != brute) {
      throw CheckFailure("osa('" + a + "','" + b + "') = " + std::to_string(dp) +
                         ", brute force says " + std::to_string(brute));
    }
  }
}

void conservation_laws() {
  Dataset data = synth_dataset(parse_spec("10x10+100"), 606);
  auto folds = stratified_folds(data, 2, 3);
  ClassifierConfig cfg;
  cfg.forest_trees = 150;
  cfg.pasvm_gamma = 1e-5;
  cfg.seed = 5;
  cfg.threads = 2;

  for (const auto& [train_set, test_set] : folds) {
    TrainedModel forest = train(ClassifierKind::HA_KFP, train_set, cfg);
    TrainedModel svm = train(ClassifierKind::PA_SVM, train_set, cfg);
    size_t roster = svm.roster().size();
    double pair_count = static_cast<double>(roster * (roster - 1) / 2);

    auto check_element = [&](const PacketSequence& t) {
      MatchVector mf = forest.match(t);
      double sum = 0.0;
      for (double s : mf.scores) sum += s;
      require(sum == static_cast<double>(cfg.forest_trees),
              "forest match sum " + std::to_string(sum) + " != tree count");
      MatchVector ms = svm.match(t);
      double votes = 0.0;
      for (double s : ms.scores) votes += s;
      require(votes == pair_count, "svm vote sum " + std::to_string(votes) + " != pair count");
    };
    for (const auto& [page, traces] : test_set.monitored)
      for (const auto& t : traces) check_element(t);
    for (const auto& t : test_set.unmonitored) check_element(t);
  }
}

void open_world_property() {
  ExperimentConfig cfg;
  cfg.dataset_source = "synth:50x50+2000";
  cfg.folds = 2;
  cfg.seed = 1337;
  cfg.threads = 2;
  cfg.classifiers = {ClassifierKind::BI_XCOR, ClassifierKind::PA_SVM, ClassifierKind::WA_KNN,
                     ClassifierKind::HA_KFP, ClassifierKind::PA_CUMUL};
  cfg.classifier.pasvm_gamma = 1e-5;
  cfg.classifier.pacumul_gamma = 1e-4;
  cfg.po_confidence_k = {1, 2};
  cfg.po_confidence_m = {0.5, 0.7, 0.85, 0.9, 0.95, 1.0};
  cfg.po_toofar_m = {0.925, 1.5, 3.0};
  cfg.po_tooclose_m = {1};
  cfg.po_distance_kinds = {DistanceKindId::XCORR};
  cfg.po_ensemble_m = {2.0, 3.0, 3.5};
  SweepResult res = run_experiment(cfg);

  bool any_strict_1000 = false;
  for (ClassifierKind kind : cfg.classifiers) {
    std::string name = classifier_kind_name(kind);
    const SweepRow* base = find_row(res, name, "baseline", "-");
    require(base != nullptr, "baseline row missing for " + name);
    double base10 = lower_of(*base, 10.0);
    double base1000 = lower_of(*base, 1000.0);
    require(base->rates_of().recall() >= cfg.recall_floor,
            name + " baseline recall under the floor");

    const SweepRow* best_conf = res.best(name, "confidence", 10.0);
    require(best_conf != nullptr, "no admissible confidence point for " + name);
    require(lower_of(*best_conf, 10.0) >= base10 - 1e-12,
            name + ": best confidence pi_10 lower bound below baseline");

    for (const char* po : {"confidence", "toofar", "tooclose"}) {
      const SweepRow* best = res.best(name, po, 1000.0);
      if (best && lower_of(*best, 1000.0) > base1000 + 1e-12) any_strict_1000 = true;
    }
  }
  {
    const SweepRow* best = res.best("ensemble", "threshold", 1000.0);
    const SweepRow* base = find_row(res, "hakfp", "baseline", "-");
    if (best && base && lower_of(*best, 1000.0) > lower_of(*base, 1000.0) + 1e-12)
      any_strict_1000 = true;
  }
  require(any_strict_1000, "no PO family strictly improved the pi_1000 lower bound");

  // Ca-OSAD at its reduced scale.
  ExperimentConfig osad_cfg;
  osad_cfg.dataset_source = "synth:10x20+200";
  osad_cfg.folds = 2;
  osad_cfg.seed = 1337;
  osad_cfg.threads = 2;
  osad_cfg.classifiers = {ClassifierKind::CA_OSAD};
  osad_cfg.po_confidence_k = {1};
  osad_cfg.po_confidence_m = {0.5, 0.7, 0.85, 1.0};
  SweepResult osad_res = run_experiment(osad_cfg);
  const SweepRow* osad_base = find_row(osad_res, "caosad", "baseline", "-");
  require(osad_base != nullptr, "caosad baseline missing");
  const SweepRow* osad_best = osad_res.best("caosad", "confidence", 10.0);
  require(osad_best != nullptr, "no admissible confidence point for caosad");
  require(lower_of(*osad_best, 10.0) >= lower_of(*osad_base, 10.0) - 1e-12,
          "caosad: best confidence pi_10 lower bound below baseline");
}

void scenario_sanity() {
  // Stub pool: classification is uniformly positive, matches are informative.
  ScenarioPool pool;
  size_t idx = 0;
  for (int p = 0; p < 5; ++p) {
    auto& v = pool.page_elements[p];
    for (int i = 0; i < 10; ++i) v.push_back(idx++);
  }
  size_t first_unmon = idx;
  for (int u = 0; u < 200; ++u) pool.unmonitored_elements.push_back(idx++);
  pool.match_for = [first_unmon](size_t element, int) {
    return element < first_unmon ? 1.0 : 0.0;
  };
  pool.positive_for = [](size_t, int) { return true; };

  require(selection_scenario(pool, true, 1, 1000, 11) == 1.0, "S=1 must always succeed");
  for (int s : {2, 5, 10}) {
    double rate = selection_scenario(pool, false, s, 10000, 13);
    require_close(rate, 1.0 / s, 0.02, "uniform-positive stub at S=" + std::to_string(s));
  }

  // b = 0: sensitive and non-sensitive clients are indistinguishable.
  ScenarioPool noisy = pool;
  noisy.positive_for = [](size_t element, int) { return element % 20 == 0; };
  IdentifyResult sym = identify_client(noisy, 0.0, 20, 4, 10000, 17);
  require_close(sym.detection_rate, sym.false_identification_rate, 0.01, "b=0 symmetry");

  IdentifyResult unreachable = identify_client(noisy, 0.3, 15, 15, 2000, 19);
  require(unreachable.detection_rate == 0.0 && unreachable.false_identification_rate == 0.0,
          "M_identify = N_obs must flag nobody");
}

void defense_properties() {
  Dataset data = synth_dataset(parse_spec("10x50+500"), 909);  // 1000 traces
  std::vector<const PacketSequence*> traces;
  for (const auto& [page, ts] : data.monitored)
    for (const auto& t : ts) traces.push_back(&t);
  for (const auto& t : data.unmonitored) traces.push_back(&t);
  require(traces.size() == 1000, "trace count");

  DefenseConfig rp;
  rp.kind = DefenseKind::RANDOM_PADDING;
  rp.bandwidth_overhead = 0.5;
  rp.time_overhead = 0.5;
  uint64_t seed = 0;
  for (const auto* t : traces) {
    DefendedTrace d = apply_defense_tagged(*t, rp, seed++);
    OverheadReport o = measure_overhead(*t, d.trace);
    double n = static_cast<double>(t->size());
    require(o.bandwidth_overhead >= 0.5 - 1e-12 &&
                o.bandwidth_overhead <= 0.5 + 1.0 / n + 1e-12,
            "bandwidth overhead outside (target, target + 1/n]");
    require(o.time_overhead.has_value(), "time overhead must be measurable");
    require(std::fabs(*o.time_overhead - 0.5) <= 0.05 * 0.5 + 1e-12,
            "time overhead off target by more than 5%");
    // Real cells preserved in order.
    size_t next = 0;
    for (size_t i = 0; i < d.trace.size(); ++i) {
      if (!d.is_real[i]) continue;
      require(next < t->size() && d.trace.cells[i].direction == t->cells[next].direction,
              "random padding reordered real cells");
      ++next;
    }
    require(next == t->size(), "random padding dropped real cells");
  }

  DefenseConfig cr;
  cr.kind = DefenseKind::CONSTANT_RATE;
  cr.rho_out = 0.02;
  cr.rho_in = 0.005;
  cr.block = 100;
  for (const auto* t : traces) {
    DefendedTrace d = apply_defense_tagged(*t, cr, 7);
    for (int dir : {1, -1}) {
      double rho = dir > 0 ? cr.rho_out : cr.rho_in;
      int64_t count = 0;
      double prev = -1.0;
      std::vector<double> arrivals;
      for (const auto& c : t->cells)
        if (c.direction == dir) arrivals.push_back(c.time);
      size_t seen = 0;
      for (size_t i = 0; i < d.trace.size(); ++i) {
        if (d.trace.cells[i].direction != dir) continue;
        ++count;
        double at = d.trace.cells[i].time;
        if (prev >= 0.0) {
          double multiple = (at - prev) / rho;
          require(std::fabs(multiple - std::round(multiple)) < 1e-6,
                  "constant-rate gap is not a rho multiple");
        }
        prev = at;
        if (d.is_real[i]) {
          require(seen < arrivals.size(), "constant rate invented real cells");
          require(at >= arrivals[seen] - 1e-9, "constant rate released a cell early");
          ++seen;
        }
      }
      require(seen == arrivals.size(), "constant rate dropped real cells");
      require(count % cr.block == 0, "per-direction count not a block multiple");
    }
  }
}

void determinism() {
  fs::path out1 = fs::temp_directory_path() / "owf_accept_t1.csv";
  fs::path out2 = fs::temp_directory_path() / "owf_accept_t4.csv";
  fs::remove(out1);
  fs::remove(out2);
  ExperimentConfig cfg;
  cfg.dataset_source = "synth:10x10+100";
  cfg.folds = 2;
  cfg.seed = 2024;
  cfg.classifiers = {ClassifierKind::BI_XCOR, ClassifierKind::WA_KNN, ClassifierKind::HA_KFP};
  cfg.classifier.forest_trees = 120;
  cfg.po_confidence_k = {1};
  cfg.po_confidence_m = {0.6, 0.8, 1.0};
  cfg.po_toofar_m = {1.0, 2.0};
  cfg.po_tooclose_m = {1};
  cfg.po_distance_kinds = {DistanceKindId::XCORR, DistanceKindId::WKNN_L1};
  cfg.po_ensemble_m = {1.5};
  cfg.ensemble_subsets = true;

  cfg.threads = 1;
  cfg.out_path = out1.string();
  run_experiment(cfg);
  cfg.threads = 4;
  cfg.out_path = out2.string();
  run_experiment(cfg);

  std::ifstream f1(out1, std::ios::binary), f2(out2, std::ios::binary);
  std::ostringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  require(!s1.str().empty(), "empty result file");
  require(s1.str() == s2.str(), "result CSVs differ across worker counts");
  fs::remove(out1);
  fs::remove(out2);
}

}  // namespace

int main() {
  std::printf("acceptance suite (backend: %s)\n",
              kernels::backend_name(kernels::active_backend()));
  criterion(1, "metric reproduction: reference worked example", metric_worked_example);
  criterion(2, "metric reproduction: optimum and bound-curve anchors", metric_anchor_points);
  criterion(3, "alpha-invariance of r-precision", alpha_invariance);
  criterion(4, "PO monotonicity suites on 20x20+500", monotonicity_suites);
  criterion(5, "OSA dynamic program equals brute-force script search", osa_oracle);
  criterion(6, "classifier conservation laws on 10x10+100", conservation_laws);
  criterion(7, "open-world PO improvement on 50x50+2000", open_world_property);
  criterion(8, "scenario sanity: selection and identification", scenario_sanity);
  criterion(9, "defense overhead and structure properties", defense_properties);
  criterion(10, "byte-identical results across worker counts", determinism);
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
