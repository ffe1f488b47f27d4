#include "owf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "owf/kernels.hpp"
#include "owf/parallel.hpp"
#include "owf/rng.hpp"

namespace owf {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(trim(s.substr(pos)));
      break;
    }
    out.push_back(trim(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("expected on/off, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.empty()) return out;
  if (text.find(':') != std::string::npos) {
    auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("grid range needs start:stop:step: " + text);
    double start = std::stod(parts[0]), stop = std::stod(parts[1]), step = std::stod(parts[2]);
    if (step <= 0.0) throw ConfigError("grid step must be > 0");
    for (double v = start; v <= stop + 1e-12; v += step) out.push_back(v);
    return out;
  }
  for (const auto& p : split(text, ','))
    if (!p.empty()) out.push_back(std::stod(p));
  return out;
}

void ExperimentConfig::validate() const {
  if (dataset_source.empty()) throw ConfigError("config: dataset is required");
  if (folds < 2) throw ConfigError("config: folds must be >= 2");
  if (classifiers.empty()) throw ConfigError("config: at least one classifier");
  if (recall_floor < 0.0 || recall_floor > 1.0) throw ConfigError("config: recall_floor in [0,1]");
  for (double r : r_values)
    if (r < 0.0) throw ConfigError("config: r values must be >= 0");
  for (double m : po_confidence_m)
    if (m < 0.0 || m > 1.0) throw ConfigError("config: M_match in [0,1]");
  for (int k : po_confidence_k)
    if (k < 1) throw ConfigError("config: confidence K >= 1");
  if (!po_ensemble_weights.empty() && !po_ensemble_wm.empty()) {
    if (po_ensemble_weights.size() != classifiers.size())
      throw ConfigError("config: ensemble weights must match classifier count");
  }
  if ((!po_toofar_m.empty() || !po_tooclose_m.empty()) && po_distance_kinds.empty())
    throw ConfigError("config: distance POs need po_distance");
  if (po_dist_variant < 1 || po_dist_variant > 6)
    throw ConfigError("config: po_dist_variant in [1,6]");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("bad config line: " + line);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key == "dataset") {
      cfg.dataset_source = value;
    } else if (key == "subset") {
      cfg.subset_spec = parse_spec(value);
    } else if (key == "folds") {
      cfg.folds = std::stoi(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "threads") {
      cfg.threads = std::stoi(value);
    } else if (key == "simd") {
      cfg.simd = value;
    } else if (key == "classifiers") {
      for (const auto& name : split(value, ','))
        if (!name.empty()) cfg.classifiers.push_back(parse_classifier_kind(name));
    } else if (key == "baseline_class") {
      cfg.baseline_class = parse_bool(value);
    } else if (key == "background_train_size") {
      cfg.background_train_size = std::stoll(value);
    } else if (key == "recall_floor") {
      cfg.recall_floor = std::stod(value);
    } else if (key == "r") {
      cfg.r_values = parse_grid(value);
    } else if (key == "train_cap") {
      cfg.train_cap = std::stoll(value);
    } else if (key == "svm_cost") {
      cfg.classifier.svm_cost = std::stod(value);
    } else if (key == "svm_tolerance") {
      cfg.classifier.svm_tolerance = std::stod(value);
    } else if (key == "pasvm_gamma") {
      cfg.classifier.pasvm_gamma = std::stod(value);
    } else if (key == "pacumul_gamma") {
      cfg.classifier.pacumul_gamma = std::stod(value);
    } else if (key == "cumul_minmax") {
      cfg.classifier.cumul_minmax = parse_bool(value);
    } else if (key == "forest_trees") {
      cfg.classifier.forest_trees = std::stoi(value);
    } else if (key == "knn_rounds") {
      cfg.classifier.knn_rounds = std::stoi(value);
    } else if (key == "knn_k") {
      cfg.classifier.knn_neighbors = std::stoi(value);
    } else if (key == "knn_delta") {
      cfg.classifier.knn_delta = std::stod(value);
    } else if (key == "osad_max_len") {
      cfg.classifier.osad_max_len = static_cast<size_t>(std::stoull(value));
    } else if (key == "po_confidence_k") {
      for (double v : parse_grid(value)) cfg.po_confidence_k.push_back(static_cast<int>(v));
    } else if (key == "po_confidence_m") {
      cfg.po_confidence_m = parse_grid(value);
    } else if (key == "po_toofar_m") {
      cfg.po_toofar_m = parse_grid(value);
    } else if (key == "po_tooclose_m") {
      for (double v : parse_grid(value)) cfg.po_tooclose_m.push_back(static_cast<int>(v));
    } else if (key == "po_distance") {
      for (const auto& name : split(value, ','))
        if (!name.empty()) cfg.po_distance_kinds.push_back(parse_distance_kind(name));
    } else if (key == "po_dist_variant") {
      cfg.po_dist_variant = std::stoi(value);
    } else if (key == "po_ensemble_m") {
      cfg.po_ensemble_m = parse_grid(value);
    } else if (key == "po_ensemble_weights") {
      cfg.po_ensemble_weights = parse_grid(value);
    } else if (key == "po_ensemble_wm") {
      cfg.po_ensemble_wm = parse_grid(value);
    } else if (key == "ensemble_subsets") {
      cfg.ensemble_subsets = parse_bool(value);
    } else if (key == "out") {
      cfg.out_path = value;
    } else if (key == "decision_log") {
      cfg.decision_log = value;
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  Dataset data;
  if (cfg.dataset_source.rfind("synth:", 0) == 0) {
    data = synth_dataset(parse_spec(cfg.dataset_source.substr(6)), cfg.seed);
  } else if (cfg.dataset_source.rfind("dir:", 0) == 0) {
    data = load_dataset_dir(cfg.dataset_source.substr(4));
  } else {
    throw ConfigError("dataset must be synth:<spec> or dir:<path>");
  }
  if (cfg.subset_spec) data = subset(data, *cfg.subset_spec, mix64(cfg.seed, 0x5b5));
  return data;
}

// --- sweep result ------------------------------------------------------------

const SweepRow* SweepResult::best(const std::string& classifier, const std::string& po,
                                  double r) const {
  const SweepRow* winner = nullptr;
  double winner_lower = -1.0;
  for (const auto& row : rows) {
    if (row.classifier != classifier || row.po != po) continue;
    Rates rt = row.rates_of();
    if (rt.recall() < recall_floor) continue;
    PrecisionEstimate est = precision_estimate(row.counts, r);
    if (!est.lower.has_value()) continue;
    if (*est.lower > winner_lower) {
      winner_lower = *est.lower;
      winner = &row;
    }
  }
  return winner;
}

std::string SweepResult::to_csv() const {
  std::string out =
      "# owf-results v1\n"
      "classifier,po,params,r,n_p,n_n,n_tp,n_wp,n_fp,r_tp,r_wp,r_fp,pi_point,pi_lower,pi_upper,"
      "method,recall_ok\n";
  for (const auto& row : rows) {
    Rates rt = row.rates_of();
    for (double r : r_values) {
      PrecisionEstimate est = precision_estimate(row.counts, r);
      out += row.classifier + "," + row.po + "," + row.params + "," + fmt(r) + "," +
             std::to_string(row.counts.n_p) + "," + std::to_string(row.counts.n_n) + "," +
             std::to_string(row.counts.n_tp) + "," + std::to_string(row.counts.n_wp) + "," +
             std::to_string(row.counts.n_fp) + "," + fmt(rt.r_tp) + "," + fmt(rt.r_wp) + "," +
             fmt(rt.r_fp) + ",";
      out += est.point ? fmt(*est.point) : "-";
      out += ",";
      out += est.lower ? fmt(*est.lower) : "-";
      out += ",";
      out += est.upper ? fmt(*est.upper) : "-";
      out += ",";
      out += est.method == IntervalMethod::WILSON ? "wilson" : "wald";
      out += ",";
      out += rt.recall() >= recall_floor ? "1" : "0";
      out += "\n";
    }
  }
  return out;
}

// --- run_experiment ----------------------------------------------------------

namespace {

struct Elements {
  std::vector<const PacketSequence*> traces;
  std::vector<Label> truth;
};

Elements flatten_test(const Dataset& test) {
  Elements e;
  for (const auto& [page, traces] : test.monitored)
    for (const auto& t : traces) {
      e.traces.push_back(&t);
      e.truth.push_back(Label::monitored(page));
    }
  for (const auto& t : test.unmonitored) {
    e.traces.push_back(&t);
    e.truth.push_back(Label::non_monitored());
  }
  return e;
}

struct ScoredClassifier {
  ClassifierKind kind;
  std::string name;
  std::vector<Label> roster;
  std::vector<MatchVector> matches;        // per element
  std::vector<ScaledMatchVector> scaled;   // per element
  std::vector<Label> baseline;             // argmax label per element
};

// Default tie-break ranking for ensembles: most historically precise first.
int default_precision_rank(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::CA_OSAD: return 0;
    case ClassifierKind::HA_KFP: return 1;
    case ClassifierKind::WA_KNN: return 2;
    case ClassifierKind::PA_CUMUL: return 3;
    case ClassifierKind::PA_SVM: return 4;
    case ClassifierKind::BI_XCOR: return 5;
  }
  return 6;
}

Dataset subsample_background(Dataset train, int64_t n, uint64_t seed) {
  if (n < 0 || n >= static_cast<int64_t>(train.unmonitored.size())) return train;
  std::vector<size_t> idx(train.unmonitored.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng(mix64(seed, 0xbac6d00d));
  for (int64_t i = 0; i < n; ++i) {
    size_t j = static_cast<size_t>(i) + rng.index(idx.size() - static_cast<size_t>(i));
    std::swap(idx[static_cast<size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<size_t>(n));
  std::sort(idx.begin(), idx.end());
  std::vector<PacketSequence> keep;
  keep.reserve(idx.size());
  for (size_t i : idx) keep.push_back(std::move(train.unmonitored[i]));
  train.unmonitored = std::move(keep);
  return train;
}

bool kind_capped(ClassifierKind k) {
  return k == ClassifierKind::PA_SVM || k == ClassifierKind::PA_CUMUL ||
         k == ClassifierKind::CA_OSAD || k == ClassifierKind::HA_KFP;
}

ScoredClassifier train_and_score(ClassifierKind kind, const Dataset& train_set,
                                 const Elements& elements, const ExperimentConfig& cfg,
                                 int fold) {
  ClassifierConfig ccfg = cfg.classifier;
  ccfg.threads = cfg.threads;
  ccfg.seed = mix64(cfg.seed, static_cast<uint64_t>(fold),
                    static_cast<uint64_t>(static_cast<int>(kind)));
  Dataset capped;
  const Dataset* effective = &train_set;
  if (cfg.train_cap > 0 && kind_capped(kind) && train_set.total_elements() > cfg.train_cap) {
    capped = cap_training(train_set, cfg.train_cap, ccfg.seed);
    effective = &capped;
  }
  TrainedModel model = train(kind, *effective, ccfg);

  ScoredClassifier sc;
  sc.kind = kind;
  sc.name = classifier_kind_name(kind);
  sc.roster = model.roster();
  sc.matches.resize(elements.traces.size());
  sc.scaled.resize(elements.traces.size());
  sc.baseline.resize(elements.traces.size());
  parallel_for(elements.traces.size(), cfg.threads, [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      sc.matches[i] = model.match(*elements.traces[i]);
      sc.scaled[i] = scale_matches(sc.matches[i]);
      sc.baseline[i] = sc.roster[argmax_index(sc.matches[i])];
    }
  });
  return sc;
}

struct DistanceCache {
  DistanceKindId kind;
  std::string name;
  InClassDistanceTable table;
  std::vector<std::map<int, double>> per_element;  // page -> class distance
};

DistanceCache build_distance_cache(DistanceKindId kind_id, const Dataset& train_set,
                                   const Elements& elements, const ExperimentConfig& cfg) {
  DistanceCache cache;
  cache.kind = kind_id;
  cache.name = distance_kind_name(kind_id);
  DistanceKind kind;
  switch (kind_id) {
    case DistanceKindId::XCORR: kind = DistanceKind::xcorr(); break;
    case DistanceKindId::PA_SVM_RBF:
      kind = DistanceKind::pa_svm_rbf(cfg.classifier.pasvm_gamma);
      break;
    case DistanceKindId::CUMUL_RBF:
      kind = DistanceKind::cumul_rbf(cfg.classifier.pacumul_gamma);
      break;
    case DistanceKindId::OSAD: kind = DistanceKind::osad(cfg.classifier.osad_max_len); break;
    case DistanceKindId::WKNN_L1: {
      auto weights = learn_weights(train_set, cfg.classifier.knn_rounds,
                                   cfg.classifier.knn_neighbors, cfg.classifier.knn_delta,
                                   cfg.classifier.seed);
      kind = DistanceKind::wknn_l1(std::move(weights));
      break;
    }
  }
  cache.table = build_inclass_table(train_set, kind, cfg.threads);

  // Flatten monitored training traces with class extents.
  std::vector<const PacketSequence*> train_traces;
  std::vector<int> pages;
  std::vector<std::pair<size_t, size_t>> extents;
  for (const auto& [page, traces] : train_set.monitored) {
    pages.push_back(page);
    size_t begin = train_traces.size();
    for (const auto& t : traces) train_traces.push_back(&t);
    extents.emplace_back(begin, train_traces.size());
  }
  DistanceEvaluator eval(kind, train_traces);
  auto variant = static_cast<ClassDistanceVariant>(cfg.po_dist_variant);

  cache.per_element.resize(elements.traces.size());
  parallel_for(elements.traces.size(), cfg.threads, [&](size_t i0, size_t i1) {
    std::vector<double> dists;
    for (size_t i = i0; i < i1; ++i) {
      auto prepared = eval.prepare(*elements.traces[i]);
      auto& out = cache.per_element[i];
      for (size_t c = 0; c < pages.size(); ++c) {
        auto [begin, end] = extents[c];
        dists.clear();
        for (size_t j = begin; j < end; ++j) dists.push_back(eval.to_member(prepared, j));
        out[pages[c]] = aggregate_class_distance(dists, variant);
      }
    }
  });
  return cache;
}

class DecisionLog {
 public:
  explicit DecisionLog(const std::string& path) {
    if (path.empty()) return;
    bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw IoError("cannot open decision log: " + path);
    if (fresh) out_ << "# owf-decisions v1\nfold,element,classifier,po,params,assumed,decision\n";
  }
  void log(int fold, const std::string& element, const std::string& classifier,
           const std::string& po, const std::string& params, Label assumed,
           const PoDecision& d) {
    if (!out_.is_open()) return;
    out_ << fold << "," << element << "," << classifier << "," << po << "," << params << ","
         << assumed.to_string() << "," << (d.accepted ? "accept" : "reject") << "\n";
  }
  bool enabled() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

}  // namespace

SweepResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  kernels::set_backend(cfg.simd);
  Dataset data = load_experiment_dataset(cfg);
  if (data.monitored.empty()) throw ConfigError("experiment needs at least one monitored page");
  FoldAssignment folds = assign_folds(data, cfg.folds, mix64(cfg.seed, 0xf01d));
  DecisionLog dlog(cfg.decision_log);

  // Deterministic row order: accumulate into an ordered map.
  std::map<std::string, std::map<std::string, std::map<std::string, ConfusionCounts>>> acc;
  auto tally_into = [&](const std::string& classifier, const std::string& po,
                        const std::string& params, const Elements& elements,
                        const std::vector<Label>& predicted) {
    ConfusionCounts& c = acc[classifier][po][params];
    for (size_t i = 0; i < elements.truth.size(); ++i) {
      Label truth = elements.truth[i];
      Label pred = predicted[i];
      if (truth.is_monitored()) {
        ++c.n_p;
        if (pred.is_monitored()) {
          if (pred == truth)
            ++c.n_tp;
          else
            ++c.n_wp;
        }
      } else {
        ++c.n_n;
        if (pred.is_monitored()) ++c.n_fp;
      }
    }
  };

  for (int fold = 0; fold < cfg.folds; ++fold) {
    Dataset train_set = folds.train_of(data, fold);
    if (!cfg.baseline_class) train_set.unmonitored.clear();
    train_set = subsample_background(std::move(train_set), cfg.background_train_size,
                                     mix64(cfg.seed, static_cast<uint64_t>(fold)));
    Dataset test_set = folds.test_of(data, fold);
    Elements elements = flatten_test(test_set);

    std::vector<ScoredClassifier> scored;
    scored.reserve(cfg.classifiers.size());
    for (ClassifierKind kind : cfg.classifiers)
      scored.push_back(train_and_score(kind, train_set, elements, cfg, fold));

    size_t roster_size = scored.front().roster.size();
    for (int k : cfg.po_confidence_k)
      if (static_cast<size_t>(k) + 1 > roster_size)
        throw ConfigError("confidence K=" + std::to_string(k) + " too large for roster of " +
                          std::to_string(roster_size));

    std::vector<DistanceCache> dist_caches;
    if (!cfg.po_toofar_m.empty() || !cfg.po_tooclose_m.empty())
      for (DistanceKindId kind : cfg.po_distance_kinds)
        dist_caches.push_back(build_distance_cache(kind, train_set, elements, cfg));

    std::vector<Label> predicted(elements.traces.size());

    for (const ScoredClassifier& sc : scored) {
      // Baseline: raw argmax.
      tally_into(sc.name, "baseline", "-", elements, sc.baseline);

      // Confidence PO.
      for (int k : cfg.po_confidence_k) {
        for (double m : cfg.po_confidence_m) {
          std::string params = "K=" + std::to_string(k) + ";M=" + fmt(m);
          for (size_t i = 0; i < elements.traces.size(); ++i) {
            Label assumed = sc.baseline[i];
            if (!assumed.is_monitored()) {
              predicted[i] = assumed;  // negatives bypass the PO
              continue;
            }
            PoDecision d = confidence_po(sc.scaled[i], sc.roster, k, m);
            predicted[i] = d.accepted ? d.label : Label::non_monitored();
            if (dlog.enabled())
              dlog.log(fold, elements.traces[i]->origin, sc.name, "confidence", params, assumed,
                       d);
          }
          tally_into(sc.name, "confidence", params, elements, predicted);
        }
      }

      // Distance POs.
      for (const DistanceCache& cache : dist_caches) {
        for (double m : cfg.po_toofar_m) {
          std::string params =
              "dist=" + cache.name + ";M=" + fmt(m) + ";variant=" + std::to_string(cfg.po_dist_variant);
          for (size_t i = 0; i < elements.traces.size(); ++i) {
            Label assumed = sc.baseline[i];
            if (!assumed.is_monitored()) {
              predicted[i] = assumed;
              continue;
            }
            double dp = cache.per_element[i].at(assumed.page_id());
            double expected = cache.table.expected.at(assumed.page_id());
            PoDecision d = too_far_po(dp, expected, m, assumed);
            predicted[i] = d.accepted ? d.label : Label::non_monitored();
            if (dlog.enabled())
              dlog.log(fold, elements.traces[i]->origin, sc.name, "toofar", params, assumed, d);
          }
          tally_into(sc.name, "toofar", params, elements, predicted);
        }
        for (int m : cfg.po_tooclose_m) {
          std::string params = "dist=" + cache.name + ";M=" + std::to_string(m) +
                               ";variant=" + std::to_string(cfg.po_dist_variant);
          for (size_t i = 0; i < elements.traces.size(); ++i) {
            Label assumed = sc.baseline[i];
            if (!assumed.is_monitored()) {
              predicted[i] = assumed;
              continue;
            }
            PoDecision d = too_close_po(cache.per_element[i], assumed, m);
            predicted[i] = d.accepted ? d.label : Label::non_monitored();
            if (dlog.enabled())
              dlog.log(fold, elements.traces[i]->origin, sc.name, "tooclose", params, assumed, d);
          }
          tally_into(sc.name, "tooclose", params, elements, predicted);
        }
      }
    }

    // Ensemble POs over the scored classifiers.
    if (scored.size() >= 2) {
      for (const auto& sc : scored)
        if (sc.roster != scored.front().roster)
          throw Error("ensemble: classifier rosters diverged");
      std::vector<int> rank;
      rank.reserve(scored.size());
      for (const auto& sc : scored) rank.push_back(default_precision_rank(sc.kind));

      if (cfg.ensemble_subsets) {
        size_t n = scored.size();
        for (uint32_t mask = 1; mask < (1u << n); ++mask) {
          std::string name = "ens[";
          bool first = true;
          for (size_t c = 0; c < n; ++c)
            if (mask & (1u << c)) {
              if (!first) name += "+";
              name += scored[c].name;
              first = false;
            }
          name += "]";
          std::vector<Label> votes;
          for (size_t i = 0; i < elements.traces.size(); ++i) {
            votes.clear();
            for (size_t c = 0; c < n; ++c)
              if (mask & (1u << c)) votes.push_back(scored[c].baseline[i]);
            PoDecision d = ensemble_unanimous(votes);
            predicted[i] = d.accepted ? d.label : Label::non_monitored();
          }
          tally_into(name, "unanimous", "-", elements, predicted);
        }
      }

      std::vector<ScaledMatchVector> per_classifier(scored.size());
      for (double m : cfg.po_ensemble_m) {
        std::string params = "M=" + fmt(m);
        for (size_t i = 0; i < elements.traces.size(); ++i) {
          for (size_t c = 0; c < scored.size(); ++c) per_classifier[c] = scored[c].scaled[i];
          PoDecision d =
              ensemble_threshold(per_classifier, scored.front().roster, rank, m);
          predicted[i] = d.accepted ? d.label : Label::non_monitored();
          if (dlog.enabled())
            dlog.log(fold, elements.traces[i]->origin, "ensemble", "threshold", params,
                     d.accepted ? d.label : Label::non_monitored(), d);
        }
        tally_into("ensemble", "threshold", params, elements, predicted);
      }
      if (!cfg.po_ensemble_weights.empty()) {
        for (double m : cfg.po_ensemble_wm) {
          std::string params = "M=" + fmt(m) + ";w=";
          for (size_t c = 0; c < cfg.po_ensemble_weights.size(); ++c) {
            if (c) params += "|";
            params += fmt(cfg.po_ensemble_weights[c]);
          }
          for (size_t i = 0; i < elements.traces.size(); ++i) {
            for (size_t c = 0; c < scored.size(); ++c) per_classifier[c] = scored[c].scaled[i];
            PoDecision d = ensemble_weighted(per_classifier, scored.front().roster, rank,
                                             cfg.po_ensemble_weights, m);
            predicted[i] = d.accepted ? d.label : Label::non_monitored();
          }
          tally_into("ensemble", "weighted", params, elements, predicted);
        }
      }
    }
  }

  SweepResult result;
  result.r_values = cfg.r_values;
  result.recall_floor = cfg.recall_floor;
  for (const auto& [classifier, by_po] : acc)
    for (const auto& [po, by_params] : by_po)
      for (const auto& [params, counts] : by_params)
        result.rows.push_back(SweepRow{classifier, po, params, counts});

  if (!cfg.out_path.empty()) {
    bool fresh = !std::filesystem::exists(cfg.out_path) ||
                 std::filesystem::file_size(cfg.out_path) == 0;
    std::ofstream out(cfg.out_path, std::ios::app);
    if (!out) throw IoError("cannot write results: " + cfg.out_path);
    std::string csv = result.to_csv();
    if (!fresh) {
      // Append rows only; the schema header is written once per file.
      size_t second_newline = csv.find('\n', csv.find('\n') + 1);
      csv = csv.substr(second_newline + 1);
    }
    out << csv;
    if (!out) throw IoError("results write failed: " + cfg.out_path);
  }
  return result;
}

std::map<std::string, std::vector<CurvePoint>> openworld_size_curve(
    const ExperimentConfig& cfg, const std::vector<int64_t>& n_grid) {
  cfg.validate();
  kernels::set_backend(cfg.simd);
  Dataset data = load_experiment_dataset(cfg);
  FoldAssignment folds = assign_folds(data, cfg.folds, mix64(cfg.seed, 0xf01d));
  Dataset train_base = folds.train_of(data, 0);
  Dataset test_set = folds.test_of(data, 0);
  Elements elements = flatten_test(test_set);

  std::map<std::string, std::vector<CurvePoint>> curves;
  for (int64_t n : n_grid) {
    Dataset train_set = train_base;
    if (n == 0)
      train_set.unmonitored.clear();
    else
      train_set = subsample_background(std::move(train_set), n, mix64(cfg.seed, 0xc42e));
    for (ClassifierKind kind : cfg.classifiers) {
      ScoredClassifier sc = train_and_score(kind, train_set, elements, cfg, 0);
      std::vector<std::pair<Label, Label>> pairs;
      pairs.reserve(elements.truth.size());
      for (size_t i = 0; i < elements.truth.size(); ++i)
        pairs.emplace_back(elements.truth[i], sc.baseline[i]);
      ConfusionCounts counts = tally(pairs);
      CurvePoint point;
      point.x = static_cast<double>(n);
      point.estimate = precision_estimate(counts, 10.0);
      point.degenerate = n == 0;
      curves[sc.name].push_back(point);
    }
  }
  return curves;
}

// --- scenarios ---------------------------------------------------------------

ScenarioPool make_scenario_pool(const TrainedModel& model, const Dataset& test_pool,
                                const ScenarioPo& po, int threads) {
  auto elements = std::make_shared<Elements>(flatten_test(test_pool));
  auto roster = std::make_shared<std::vector<Label>>(model.roster());
  auto matches = std::make_shared<std::vector<MatchVector>>(elements->traces.size());
  auto finals = std::make_shared<std::vector<Label>>(elements->traces.size());

  parallel_for(elements->traces.size(), threads, [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      (*matches)[i] = model.match(*elements->traces[i]);
      Label assumed = (*roster)[argmax_index((*matches)[i])];
      if (po.enabled && assumed.is_monitored()) {
        ScaledMatchVector scaled = scale_matches((*matches)[i]);
        PoDecision d = confidence_po(scaled, *roster, po.k, po.m_match);
        assumed = d.accepted ? d.label : Label::non_monitored();
      }
      (*finals)[i] = assumed;
    }
  });

  auto roster_pos = std::make_shared<std::map<int, size_t>>();
  for (size_t i = 0; i < roster->size(); ++i)
    if ((*roster)[i].is_monitored()) (*roster_pos)[(*roster)[i].page_id()] = i;

  ScenarioPool pool;
  size_t idx = 0;
  for (const auto& [page, traces] : test_pool.monitored) {
    auto& v = pool.page_elements[page];
    for (size_t j = 0; j < traces.size(); ++j) v.push_back(idx++);
  }
  for (size_t j = 0; j < test_pool.unmonitored.size(); ++j)
    pool.unmonitored_elements.push_back(idx++);

  pool.match_for = [matches, roster_pos](size_t element, int target_page) {
    return (*matches)[element].scores[roster_pos->at(target_page)];
  };
  pool.positive_for = [finals](size_t element, int target_page) {
    return (*finals)[element] == Label::monitored(target_page);
  };
  return pool;
}

double selection_scenario(const ScenarioPool& pool, bool use_po, int s_candidates, int trials,
                          uint64_t seed) {
  if (s_candidates < 1 || trials < 1) throw Error("selection_scenario: S and trials must be >= 1");
  std::vector<int> pages;
  for (const auto& [page, elems] : pool.page_elements)
    if (!elems.empty()) pages.push_back(page);
  if (pages.empty()) throw Error("selection_scenario: no sensitive pages in pool");
  if (s_candidates > 1 && pool.unmonitored_elements.empty())
    throw Error("selection_scenario: no non-sensitive traces in pool");

  Rng rng(mix64(seed, 0x5e1ec101));
  int64_t successes = 0;
  std::vector<std::pair<size_t, bool>> candidates;  // (element, is_sensitive)
  std::vector<size_t> positives;
  for (int t = 0; t < trials; ++t) {
    int page = pages[rng.index(pages.size())];
    const auto& page_elems = pool.page_elements.at(page);
    candidates.clear();
    candidates.emplace_back(page_elems[rng.index(page_elems.size())], true);
    for (int s = 1; s < s_candidates; ++s)
      candidates.emplace_back(
          pool.unmonitored_elements[rng.index(pool.unmonitored_elements.size())], false);
    rng.shuffle(candidates);

    if (use_po) {
      size_t best = 0;
      double best_match = pool.match_for(candidates[0].first, page);
      for (size_t c = 1; c < candidates.size(); ++c) {
        double m = pool.match_for(candidates[c].first, page);
        if (m > best_match) {
          best_match = m;
          best = c;
        }
      }
      if (candidates[best].second) ++successes;
    } else {
      positives.clear();
      for (size_t c = 0; c < candidates.size(); ++c)
        if (pool.positive_for(candidates[c].first, page)) positives.push_back(c);
      if (!positives.empty() && candidates[positives[rng.index(positives.size())]].second)
        ++successes;
    }
  }
  return static_cast<double>(successes) / static_cast<double>(trials);
}

IdentifyResult identify_client(const ScenarioPool& pool, double b, int n_obs, int m_identify,
                               int trials, uint64_t seed) {
  if (b < 0.0 || b > 1.0) throw Error("identify_client: b in [0,1]");
  if (n_obs < 1 || trials < 1) throw Error("identify_client: n_obs and trials must be >= 1");
  std::vector<int> pages;
  for (const auto& [page, elems] : pool.page_elements)
    if (!elems.empty()) pages.push_back(page);
  if (pages.empty() || pool.unmonitored_elements.empty())
    throw Error("identify_client: pool needs sensitive and non-sensitive traces");

  Rng rng(mix64(seed, 0x1de47151));
  int64_t detected = 0, false_id = 0;
  for (int t = 0; t < trials; ++t) {
    int page = pages[rng.index(pages.size())];
    const auto& page_elems = pool.page_elements.at(page);
    int x = 0;
    for (int o = 0; o < n_obs; ++o) {
      size_t elem = rng.bernoulli(b)
                        ? page_elems[rng.index(page_elems.size())]
                        : pool.unmonitored_elements[rng.index(pool.unmonitored_elements.size())];
      if (pool.positive_for(elem, page)) ++x;
    }
    if (x > m_identify) ++detected;

    int x2 = 0;
    for (int o = 0; o < n_obs; ++o) {
      size_t elem = pool.unmonitored_elements[rng.index(pool.unmonitored_elements.size())];
      if (pool.positive_for(elem, page)) ++x2;
    }
    if (x2 > m_identify) ++false_id;
  }
  IdentifyResult r;
  r.detection_rate = static_cast<double>(detected) / static_cast<double>(trials);
  r.false_identification_rate = static_cast<double>(false_id) / static_cast<double>(trials);
  return r;
}

int calibrate_m_identify(const ScenarioPool& pool, int n_obs, double target_rate, int trials,
                         uint64_t seed) {
  std::vector<int> pages;
  for (const auto& [page, elems] : pool.page_elements)
    if (!elems.empty()) pages.push_back(page);
  if (pages.empty() || pool.unmonitored_elements.empty())
    throw Error("calibrate_m_identify: pool needs sensitive and non-sensitive traces");
  // Simulate non-sensitive clients once, then scan the threshold.
  Rng rng(mix64(seed, 0xca11b4a7));
  std::vector<int> counts(static_cast<size_t>(trials), 0);
  for (int t = 0; t < trials; ++t) {
    int page = pages[rng.index(pages.size())];
    for (int o = 0; o < n_obs; ++o) {
      size_t elem = pool.unmonitored_elements[rng.index(pool.unmonitored_elements.size())];
      if (pool.positive_for(elem, page)) ++counts[static_cast<size_t>(t)];
    }
  }
  for (int m = 0; m <= n_obs; ++m) {
    int64_t over = 0;
    for (int c : counts)
      if (c > m) ++over;
    if (static_cast<double>(over) / static_cast<double>(trials) <= target_rate) return m;
  }
  return n_obs;
}

}  // namespace owf
