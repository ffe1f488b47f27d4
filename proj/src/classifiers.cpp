#include "owf/classifiers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "owf/kernels.hpp"
#include "owf/parallel.hpp"
#include "owf/rng.hpp"

namespace owf {

const char* classifier_kind_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::BI_XCOR: return "bixcor";
    case ClassifierKind::PA_SVM: return "pasvm";
    case ClassifierKind::CA_OSAD: return "caosad";
    case ClassifierKind::WA_KNN: return "waknn";
    case ClassifierKind::HA_KFP: return "hakfp";
    case ClassifierKind::PA_CUMUL: return "pacumul";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "bixcor") return ClassifierKind::BI_XCOR;
  if (name == "pasvm") return ClassifierKind::PA_SVM;
  if (name == "caosad") return ClassifierKind::CA_OSAD;
  if (name == "waknn") return ClassifierKind::WA_KNN;
  if (name == "hakfp") return ClassifierKind::HA_KFP;
  if (name == "pacumul") return ClassifierKind::PA_CUMUL;
  throw ConfigError("unknown classifier: " + name);
}

uint64_t ClassifierConfig::digest() const {
  uint64_t h = fnv1a64(&svm_cost, sizeof(svm_cost));
  h = fnv1a64(&svm_tolerance, sizeof(svm_tolerance), h);
  h = fnv1a64(&pasvm_gamma, sizeof(pasvm_gamma), h);
  h = fnv1a64(&pacumul_gamma, sizeof(pacumul_gamma), h);
  h = fnv1a64(&cumul_minmax, sizeof(cumul_minmax), h);
  h = fnv1a64(&forest_trees, sizeof(forest_trees), h);
  h = fnv1a64(&knn_rounds, sizeof(knn_rounds), h);
  h = fnv1a64(&knn_neighbors, sizeof(knn_neighbors), h);
  h = fnv1a64(&knn_delta, sizeof(knn_delta), h);
  h = fnv1a64(&osad_max_len, sizeof(osad_max_len), h);
  h = fnv1a64(&seed, sizeof(seed), h);
  return h;
}

std::vector<size_t> ranked_order(const MatchVector& mv) {
  std::vector<size_t> order(mv.scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return mv.scores[a] > mv.scores[b];  // stable: ties keep roster order
  });
  return order;
}

size_t argmax_index(const MatchVector& mv) {
  size_t best = 0;
  for (size_t i = 1; i < mv.scores.size(); ++i)
    if (mv.scores[i] > mv.scores[best]) best = i;
  return best;
}

namespace {

// Flattened training view: sample -> (trace pointer, roster class index).
struct Samples {
  std::vector<const PacketSequence*> traces;
  std::vector<int32_t> cls;
  std::vector<Label> roster;
};

Samples flatten(const Dataset& train_set) {
  Samples s;
  for (const auto& [page, traces] : train_set.monitored) {
    if (traces.empty()) throw Error("train: page " + std::to_string(page) + " has no instances");
    s.roster.push_back(Label::monitored(page));
  }
  if (!train_set.unmonitored.empty()) s.roster.push_back(Label::non_monitored());
  int32_t ci = 0;
  for (const auto& [page, traces] : train_set.monitored) {
    for (const auto& t : traces) {
      s.traces.push_back(&t);
      s.cls.push_back(ci);
    }
    ++ci;
  }
  for (const auto& t : train_set.unmonitored) {
    s.traces.push_back(&t);
    s.cls.push_back(ci);
  }
  return s;
}

// --- Bi-XCor -----------------------------------------------------------------

XCorrRepr class_template(const std::vector<const PacketSequence*>& traces) {
  std::vector<size_t> lens;
  lens.reserve(traces.size());
  std::vector<XCorrRepr> reprs;
  reprs.reserve(traces.size());
  for (auto* t : traces) {
    reprs.push_back(repr_xcorr(*t));
    lens.push_back(reprs.back().times.size());
  }
  std::sort(lens.begin(), lens.end());
  size_t len = lens[(lens.size() - 1) / 2];  // lower median aligns ragged loads
  XCorrRepr tpl;
  tpl.times.assign(len, 0.0);
  tpl.lengths.assign(len, 0.0);
  for (const auto& r : reprs) {
    size_t m = std::min(len, r.times.size());
    for (size_t i = 0; i < m; ++i) {
      tpl.times[i] += r.times[i];
      tpl.lengths[i] += r.lengths[i];
    }
    // truncated/zero-padded beyond m
  }
  double inv = 1.0 / static_cast<double>(reprs.size());
  for (size_t i = 0; i < len; ++i) {
    tpl.times[i] *= inv;
    tpl.lengths[i] *= inv;
  }
  return tpl;
}

engine::Xcor train_xcor(const Samples& samples, const ClassifierConfig& config) {
  engine::Xcor eng;
  size_t r = samples.roster.size();
  eng.templates.resize(r);
  std::vector<std::vector<const PacketSequence*>> by_class(r);
  for (size_t i = 0; i < samples.traces.size(); ++i)
    by_class[static_cast<size_t>(samples.cls[i])].push_back(samples.traces[i]);
  parallel_for(r, config.threads, [&](size_t c0, size_t c1) {
    for (size_t c = c0; c < c1; ++c) eng.templates[c] = class_template(by_class[c]);
  });
  return eng;
}

// --- SVM kinds ---------------------------------------------------------------

void apply_minmax(const std::vector<double>& lo, const std::vector<double>& span,
                  FeatureVector* fv) {
  for (size_t i = 0; i < fv->values.size(); ++i)
    fv->values[i] = (fv->values[i] - lo[i]) / span[i];
}

engine::Svm train_svm(ClassifierKind kind, const Samples& samples,
                      const ClassifierConfig& config) {
  engine::Svm eng;
  size_t n = samples.traces.size();
  size_t r = samples.roster.size();
  if (r < 2) throw Error("svm training needs >= 2 classes");
  eng.sample_class = samples.cls;
  eng.osad_max_len = config.osad_max_len;

  if (kind == ClassifierKind::CA_OSAD) {
    eng.dirstrs.reserve(n);
    for (auto* t : samples.traces) {
      DirectionString s = repr_direction_string(*t);
      if (s.size() > config.osad_max_len) s.resize(config.osad_max_len);
      eng.dirstrs.push_back(std::move(s));
    }
  } else {
    eng.catalog =
        kind == ClassifierKind::PA_SVM ? FeatureCatalog::PA_SVM : FeatureCatalog::PA_CUMUL;
    eng.gamma = kind == ClassifierKind::PA_SVM ? config.pasvm_gamma : config.pacumul_gamma;
    eng.features.reserve(n);
    for (auto* t : samples.traces) eng.features.push_back(repr_catalog(*t, eng.catalog));
    if (kind == ClassifierKind::PA_CUMUL && config.cumul_minmax) {
      size_t dim = eng.features[0].size();
      eng.scale_lo.assign(dim, std::numeric_limits<double>::infinity());
      std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
      for (const auto& f : eng.features)
        for (size_t i = 0; i < dim; ++i) {
          eng.scale_lo[i] = std::min(eng.scale_lo[i], f.values[i]);
          hi[i] = std::max(hi[i], f.values[i]);
        }
      eng.scale_span.resize(dim);
      for (size_t i = 0; i < dim; ++i) {
        eng.scale_span[i] = hi[i] - eng.scale_lo[i];
        if (eng.scale_span[i] <= 0.0) eng.scale_span[i] = 1.0;  // constant dim
      }
      eng.minmax_scaled = true;
      for (auto& f : eng.features) apply_minmax(eng.scale_lo, eng.scale_span, &f);
    }
  }

  // Global Gram: K = 1 - d, evaluated directly in kernel form.
  std::vector<float> gram(n * n);
  parallel_for(n, config.threads, [&](size_t i0, size_t i1) {
    for (size_t i = i0; i < i1; ++i) {
      for (size_t j = 0; j <= i; ++j) {
        double k;
        if (kind == ClassifierKind::CA_OSAD) {
          const auto& a = eng.dirstrs[i];
          const auto& b = eng.dirstrs[j];
          double d = static_cast<double>(osa(a, b));
          k = std::exp(-2.0 * d * d / static_cast<double>(std::min(a.size(), b.size())));
        } else {
          k = std::exp(-eng.gamma * kernels::squared_l2(eng.features[i].data(),
                                                        eng.features[j].data(),
                                                        eng.features[i].size()));
        }
        gram[i * n + j] = static_cast<float>(k);
        gram[j * n + i] = static_cast<float>(k);
      }
    }
  });

  // Sample indices per class, in training order.
  std::vector<std::vector<int32_t>> members(r);
  for (size_t i = 0; i < n; ++i) members[static_cast<size_t>(samples.cls[i])].push_back(
      static_cast<int32_t>(i));

  size_t n_pairs = r * (r - 1) / 2;
  eng.machines.resize(n_pairs);
  std::vector<std::pair<size_t, size_t>> pairs;
  pairs.reserve(n_pairs);
  for (size_t a = 0; a < r; ++a)
    for (size_t b = a + 1; b < r; ++b) pairs.emplace_back(a, b);

  SvmConfig svm_cfg;
  svm_cfg.cost = config.svm_cost;
  svm_cfg.tolerance = config.svm_tolerance;

  std::atomic<int> flagged{0};
  parallel_for(n_pairs, config.threads, [&](size_t p0, size_t p1) {
    std::vector<int32_t> idx;
    std::vector<int8_t> labels;
    for (size_t p = p0; p < p1; ++p) {
      auto [a, b] = pairs[p];
      idx.clear();
      labels.clear();
      for (int32_t i : members[a]) {
        idx.push_back(i);
        labels.push_back(1);
      }
      for (int32_t i : members[b]) {
        idx.push_back(i);
        labels.push_back(-1);
      }
      KernelView view(gram.data(), n, idx);
      BinarySvm machine = train_binary_svm(view, labels, svm_cfg);
      if (!machine.converged || machine.zero_margin) flagged.fetch_add(1);
      // Remap support vectors to global sample indices.
      for (auto& sv : machine.sv_indices) sv = idx[static_cast<size_t>(sv)];
      eng.machines[p] = std::move(machine);
    }
  });
  eng.flagged_machines = flagged.load();
  return eng;
}

// --- Wa-kNN ------------------------------------------------------------------

engine::Knn train_knn(const Samples& samples, const ClassifierConfig& config) {
  engine::Knn eng;
  eng.sample_class = samples.cls;
  eng.features.reserve(samples.traces.size());
  for (auto* t : samples.traces) eng.features.push_back(repr_catalog(*t, FeatureCatalog::WA_KNN));
  eng.weights = learn_weights(eng.features, eng.sample_class, config.knn_rounds,
                              config.knn_neighbors, config.knn_delta, config.seed);
  return eng;
}

// --- Ha-kFP ------------------------------------------------------------------

engine::Kfp train_kfp(const Samples& samples, const ClassifierConfig& config) {
  engine::Kfp eng;
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.traces.size());
  for (auto* t : samples.traces)
    rows.push_back(repr_catalog(*t, FeatureCatalog::HA_KFP).values);
  std::vector<int> classes(samples.cls.begin(), samples.cls.end());
  RandomForest::Config fc;
  fc.trees = config.forest_trees;
  fc.threads = config.threads;
  fc.seed = config.seed;
  eng.forest.train(rows, classes, static_cast<int>(samples.roster.size()), fc);
  return eng;
}

}  // namespace

std::vector<double> learn_weights(const std::vector<FeatureVector>& features,
                                  const std::vector<int32_t>& sample_class, int rounds,
                                  int k_neighbors, double delta, uint64_t seed) {
  if (features.empty()) throw Error("learn_weights: empty training set");
  size_t n = features.size();
  size_t dim = features[0].size();
  std::vector<double> w(dim, 1.0);
  if (delta == 0.0 || rounds <= 0) return w;
  size_t k = static_cast<size_t>(std::max(1, k_neighbors));

  std::vector<std::pair<double, size_t>> good, bad;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  for (int round = 0; round < rounds; ++round) {
    Rng rng(mix64(seed, 0x77e16475, static_cast<uint64_t>(round)));
    rng.shuffle(order);
    for (size_t oi = 0; oi < n; ++oi) {
      size_t i = order[oi];
      good.clear();
      bad.clear();
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double d = kernels::weighted_l1(features[i].data(), features[j].data(), w.data(), dim);
        (sample_class[j] == sample_class[i] ? good : bad).emplace_back(d, j);
      }
      if (good.empty() || bad.empty()) continue;
      size_t kg = std::min(k, good.size());
      size_t kb = std::min(k, bad.size());
      std::partial_sort(good.begin(), good.begin() + static_cast<ptrdiff_t>(kg), good.end());
      std::partial_sort(bad.begin(), bad.begin() + static_cast<ptrdiff_t>(kb), bad.end());
      for (size_t f = 0; f < dim; ++f) {
        double gs = 0.0, bs = 0.0;
        for (size_t t = 0; t < kg; ++t)
          gs += std::fabs(features[i].values[f] - features[good[t].second].values[f]);
        for (size_t t = 0; t < kb; ++t)
          bs += std::fabs(features[i].values[f] - features[bad[t].second].values[f]);
        if (bs <= gs) w[f] *= 1.0 - delta;
      }
    }
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (sum <= 0.0) {
      std::fill(w.begin(), w.end(), 1.0);  // degenerate pass; restart uniform
    } else {
      double scale = static_cast<double>(dim) / sum;
      for (double& x : w) x *= scale;
    }
  }
  return w;
}

std::vector<double> learn_weights(const Dataset& train_set, int rounds, int k_neighbors,
                                  double delta, uint64_t seed) {
  Samples samples = flatten(train_set);
  std::vector<FeatureVector> features;
  features.reserve(samples.traces.size());
  for (auto* t : samples.traces) features.push_back(repr_catalog(*t, FeatureCatalog::WA_KNN));
  return learn_weights(features, samples.cls, rounds, k_neighbors, delta, seed);
}

TrainedModel train(ClassifierKind kind, const Dataset& train_set,
                   const ClassifierConfig& config) {
  train_set.validate();
  Samples samples = flatten(train_set);
  if (samples.roster.empty()) throw Error("train: empty dataset");
  TrainedModel model;
  model.kind_ = kind;
  model.roster_ = samples.roster;
  model.config_digest_ = config.digest();
  switch (kind) {
    case ClassifierKind::BI_XCOR: model.xcor_ = train_xcor(samples, config); break;
    case ClassifierKind::PA_SVM:
    case ClassifierKind::CA_OSAD:
    case ClassifierKind::PA_CUMUL: model.svm_ = train_svm(kind, samples, config); break;
    case ClassifierKind::WA_KNN: model.knn_ = train_knn(samples, config); break;
    case ClassifierKind::HA_KFP: model.kfp_ = train_kfp(samples, config); break;
  }
  return model;
}

MatchVector TrainedModel::match(const PacketSequence& seq) const {
  size_t r = roster_.size();
  MatchVector mv;
  mv.scores.assign(r, 0.0);
  switch (kind_) {
    case ClassifierKind::BI_XCOR: {
      XCorrRepr p = repr_xcorr(seq);
      for (size_t c = 0; c < r; ++c) {
        const auto& tpl = xcor_.templates[c];
        mv.scores[c] =
            cross_correlation(p.times, tpl.times) + cross_correlation(p.lengths, tpl.lengths);
      }
      break;
    }
    case ClassifierKind::PA_SVM:
    case ClassifierKind::CA_OSAD:
    case ClassifierKind::PA_CUMUL: {
      size_t n = svm_.sample_class.size();
      std::vector<double> row(n);
      if (kind_ == ClassifierKind::CA_OSAD) {
        DirectionString s = repr_direction_string(seq);
        if (s.size() > svm_.osad_max_len) s.resize(svm_.osad_max_len);
        for (size_t j = 0; j < n; ++j) {
          const auto& b = svm_.dirstrs[j];
          double d = static_cast<double>(osa(s, b));
          row[j] = std::exp(-2.0 * d * d / static_cast<double>(std::min(s.size(), b.size())));
        }
      } else {
        FeatureVector f = repr_catalog(seq, svm_.catalog);
        if (svm_.minmax_scaled) apply_minmax(svm_.scale_lo, svm_.scale_span, &f);
        for (size_t j = 0; j < n; ++j)
          row[j] = std::exp(-svm_.gamma * kernels::squared_l2(f.data(), svm_.features[j].data(),
                                                              f.size()));
      }
      size_t p = 0;
      for (size_t a = 0; a < r; ++a) {
        for (size_t b = a + 1; b < r; ++b, ++p) {
          double f = svm_.machines[p].decide(row);
          // ties go to the lower roster index
          mv.scores[f >= 0.0 ? a : b] += 1.0;
        }
      }
      break;
    }
    case ClassifierKind::WA_KNN: {
      FeatureVector f = repr_catalog(seq, FeatureCatalog::WA_KNN);
      std::vector<double> best(r, std::numeric_limits<double>::infinity());
      for (size_t j = 0; j < knn_.features.size(); ++j) {
        double d = kernels::weighted_l1(f.data(), knn_.features[j].data(), knn_.weights.data(),
                                        f.size());
        size_t c = static_cast<size_t>(knn_.sample_class[j]);
        if (d < best[c]) best[c] = d;
      }
      for (size_t c = 0; c < r; ++c) mv.scores[c] = -best[c];
      break;
    }
    case ClassifierKind::HA_KFP: {
      FeatureVector f = repr_catalog(seq, FeatureCatalog::HA_KFP);
      mv.scores = kfp_.forest.match(f.values);
      break;
    }
  }
  return mv;
}

Label TrainedModel::classify_baseline(const PacketSequence& seq) const {
  MatchVector mv = match(seq);
  return roster_[argmax_index(mv)];
}

// --- serialization -----------------------------------------------------------

namespace {

constexpr char kModelMagic[4] = {'O', 'W', 'F', 'M'};
constexpr uint32_t kModelVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

template <typename T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
  put<uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> get_vec(std::istream& in) {
  uint64_t n = get<uint64_t>(in);
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  return v;
}

void put_str(std::ostream& out, const std::string& s) {
  put<uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
  uint64_t n = get<uint64_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace

void TrainedModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model: " + path);
  out.write(kModelMagic, 4);
  put(out, kModelVersion);
  put<uint8_t>(out, static_cast<uint8_t>(kind_));
  put(out, config_digest_);
  put<uint64_t>(out, roster_.size());
  for (Label l : roster_) put<int32_t>(out, l.is_monitored() ? l.page_id() : -1);

  switch (kind_) {
    case ClassifierKind::BI_XCOR:
      for (const auto& tpl : xcor_.templates) {
        put_vec(out, tpl.times);
        put_vec(out, tpl.lengths);
      }
      break;
    case ClassifierKind::PA_SVM:
    case ClassifierKind::CA_OSAD:
    case ClassifierKind::PA_CUMUL: {
      put<uint8_t>(out, static_cast<uint8_t>(svm_.catalog));
      put(out, svm_.gamma);
      put<uint64_t>(out, svm_.osad_max_len);
      put<uint8_t>(out, svm_.minmax_scaled ? 1 : 0);
      put_vec(out, svm_.scale_lo);
      put_vec(out, svm_.scale_span);
      put_vec(out, svm_.sample_class);
      put<uint64_t>(out, svm_.features.size());
      for (const auto& f : svm_.features) put_vec(out, f.values);
      put<uint64_t>(out, svm_.dirstrs.size());
      for (const auto& s : svm_.dirstrs) put_str(out, s);
      put<uint64_t>(out, svm_.machines.size());
      for (const auto& m : svm_.machines) {
        put_vec(out, m.sv_indices);
        put_vec(out, m.sv_coef);
        put(out, m.bias);
        put<uint8_t>(out, (m.converged ? 1 : 0) | (m.zero_margin ? 2 : 0));
      }
      put<int32_t>(out, svm_.flagged_machines);
      break;
    }
    case ClassifierKind::WA_KNN: {
      put_vec(out, knn_.sample_class);
      put<uint64_t>(out, knn_.features.size());
      for (const auto& f : knn_.features) put_vec(out, f.values);
      put_vec(out, knn_.weights);
      break;
    }
    case ClassifierKind::HA_KFP: {
      put<int32_t>(out, kfp_.forest.n_classes());
      const auto& trees = kfp_.forest.trees();
      put<uint64_t>(out, trees.size());
      for (const auto& t : trees) {
        put<uint64_t>(out, t.nodes.size());
        out.write(reinterpret_cast<const char*>(t.nodes.data()),
                  static_cast<std::streamsize>(t.nodes.size() * sizeof(RandomForest::Node)));
      }
      put_vec(out, kfp_.forest.leaf_counts());
      break;
    }
  }
  if (!out) throw IoError("model write failed: " + path);
}

TrainedModel TrainedModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw IoError("not a model file: " + path);
  uint32_t version = get<uint32_t>(in);
  if (version != kModelVersion)
    throw IoError("unsupported model version " + std::to_string(version));
  TrainedModel model;
  model.kind_ = static_cast<ClassifierKind>(get<uint8_t>(in));
  model.config_digest_ = get<uint64_t>(in);
  uint64_t r = get<uint64_t>(in);
  model.roster_.reserve(r);
  for (uint64_t i = 0; i < r; ++i) {
    int32_t page = get<int32_t>(in);
    model.roster_.push_back(page < 0 ? Label::non_monitored() : Label::monitored(page));
  }

  switch (model.kind_) {
    case ClassifierKind::BI_XCOR:
      model.xcor_.templates.resize(r);
      for (auto& tpl : model.xcor_.templates) {
        tpl.times = get_vec<double>(in);
        tpl.lengths = get_vec<double>(in);
      }
      break;
    case ClassifierKind::PA_SVM:
    case ClassifierKind::CA_OSAD:
    case ClassifierKind::PA_CUMUL: {
      auto& e = model.svm_;
      e.catalog = static_cast<FeatureCatalog>(get<uint8_t>(in));
      e.gamma = get<double>(in);
      e.osad_max_len = get<uint64_t>(in);
      e.minmax_scaled = get<uint8_t>(in) != 0;
      e.scale_lo = get_vec<double>(in);
      e.scale_span = get_vec<double>(in);
      e.sample_class = get_vec<int32_t>(in);
      uint64_t nf = get<uint64_t>(in);
      e.features.resize(nf);
      for (auto& f : e.features) {
        f.values = get_vec<double>(in);
        f.catalog_id = e.catalog;
      }
      uint64_t ns = get<uint64_t>(in);
      e.dirstrs.resize(ns);
      for (auto& s : e.dirstrs) s = get_str(in);
      uint64_t nm = get<uint64_t>(in);
      e.machines.resize(nm);
      for (auto& m : e.machines) {
        m.sv_indices = get_vec<int32_t>(in);
        m.sv_coef = get_vec<double>(in);
        m.bias = get<double>(in);
        uint8_t flags = get<uint8_t>(in);
        m.converged = flags & 1;
        m.zero_margin = flags & 2;
      }
      e.flagged_machines = get<int32_t>(in);
      break;
    }
    case ClassifierKind::WA_KNN: {
      auto& e = model.knn_;
      e.sample_class = get_vec<int32_t>(in);
      uint64_t nf = get<uint64_t>(in);
      e.features.resize(nf);
      for (auto& f : e.features) {
        f.values = get_vec<double>(in);
        f.catalog_id = FeatureCatalog::WA_KNN;
      }
      e.weights = get_vec<double>(in);
      break;
    }
    case ClassifierKind::HA_KFP: {
      int32_t n_classes = get<int32_t>(in);
      uint64_t nt = get<uint64_t>(in);
      std::vector<RandomForest::Tree> trees(nt);
      for (auto& t : trees) {
        uint64_t nn = get<uint64_t>(in);
        t.nodes.resize(nn);
        in.read(reinterpret_cast<char*>(t.nodes.data()),
                static_cast<std::streamsize>(nn * sizeof(RandomForest::Node)));
      }
      auto counts = get_vec<int32_t>(in);
      model.kfp_.forest.restore(std::move(trees), std::move(counts), n_classes);
      break;
    }
  }
  if (!in) throw IoError("truncated model: " + path);
  return model;
}

}  // namespace owf
