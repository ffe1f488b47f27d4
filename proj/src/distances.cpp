#include "owf/distances.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "owf/common.hpp"
#include "owf/kernels.hpp"

namespace owf {

const char* distance_kind_name(DistanceKindId id) {
  switch (id) {
    case DistanceKindId::XCORR: return "xcorr";
    case DistanceKindId::PA_SVM_RBF: return "pasvm";
    case DistanceKindId::OSAD: return "osad";
    case DistanceKindId::WKNN_L1: return "waknn";
    case DistanceKindId::CUMUL_RBF: return "pacumul";
  }
  return "?";
}

DistanceKindId parse_distance_kind(const std::string& name) {
  if (name == "xcorr") return DistanceKindId::XCORR;
  if (name == "pasvm") return DistanceKindId::PA_SVM_RBF;
  if (name == "osad") return DistanceKindId::OSAD;
  if (name == "waknn") return DistanceKindId::WKNN_L1;
  if (name == "pacumul") return DistanceKindId::CUMUL_RBF;
  throw ConfigError("unknown distance kind: " + name);
}

DistanceKind DistanceKind::xcorr() { return DistanceKind{DistanceKindId::XCORR, 0.0, {}, 5000}; }
DistanceKind DistanceKind::pa_svm_rbf(double gamma) {
  return DistanceKind{DistanceKindId::PA_SVM_RBF, gamma, {}, 5000};
}
DistanceKind DistanceKind::osad(size_t max_len) {
  return DistanceKind{DistanceKindId::OSAD, 0.0, {}, max_len};
}
DistanceKind DistanceKind::wknn_l1(std::vector<double> weights) {
  return DistanceKind{DistanceKindId::WKNN_L1, 0.0, std::move(weights), 5000};
}
DistanceKind DistanceKind::cumul_rbf(double gamma) {
  return DistanceKind{DistanceKindId::CUMUL_RBF, gamma, {}, 5000};
}

void DistanceKind::validate() const {
  if ((id == DistanceKindId::PA_SVM_RBF || id == DistanceKindId::CUMUL_RBF) && !(gamma > 0.0))
    throw ConfigError("RBF distance needs gamma > 0");
  if (id == DistanceKindId::WKNN_L1) {
    if (weights.empty()) throw ConfigError("weighted L1 distance needs weights");
    bool any = false;
    for (double w : weights) {
      if (w < 0.0) throw ConfigError("weights must be >= 0");
      if (w > 0.0) any = true;
    }
    if (!any) throw ConfigError("weights must not be all zero");
  }
  if (id == DistanceKindId::OSAD && osad_max_len == 0)
    throw ConfigError("osad_max_len must be >= 1");
}

uint64_t DistanceKind::params_digest() const {
  uint64_t h = fnv1a64(&id, sizeof(id));
  h = fnv1a64(&gamma, sizeof(gamma), h);
  h = fnv1a64(&osad_max_len, sizeof(osad_max_len), h);
  if (!weights.empty()) h = fnv1a64(weights.data(), weights.size() * sizeof(double), h);
  return h;
}

double cross_correlation(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  if (a.empty() || b.empty()) throw Error("cross_correlation on empty list");
  double sa, sa2, sb, sb2;
  kernels::sum_sumsq(a.data(), a.size(), &sa, &sa2);
  kernels::sum_sumsq(b.data(), b.size(), &sb, &sb2);
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  double mean_a = sa / na;
  double mean_b = sb / nb;
  double var_a = std::max(0.0, sa2 / na - mean_a * mean_a);
  double var_b = std::max(0.0, sb2 / nb - mean_b * mean_b);
  double sig = std::sqrt(var_a) * std::sqrt(var_b);
  if (degenerate) *degenerate = false;
  if (sig == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  size_t m = std::min(a.size(), b.size());
  double num = kernels::centered_dot(a.data(), mean_a, b.data(), mean_b, m);
  return num / (static_cast<double>(m) * sig);
}

double dist_xcorr(const XCorrRepr& a, const XCorrRepr& b) {
  return 2.0 - cross_correlation(a.times, b.times) - cross_correlation(a.lengths, b.lengths);
}

double dist_rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  if (a.size() != b.size())
    throw Error("rbf distance length mismatch: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  double d2 = kernels::squared_l2(a.data(), b.data(), a.size());
  return 1.0 - std::exp(-gamma * d2);
}

double dist_rbf(const FeatureVector& a, const FeatureVector& b, double gamma) {
  if (a.catalog_id != b.catalog_id) throw Error("rbf distance across catalogs");
  return dist_rbf(std::span<const double>(a.values), std::span<const double>(b.values), gamma);
}

int64_t osa(const DirectionString& a, const DirectionString& b) {
  const size_t na = a.size(), nb = b.size();
  if (na == 0) return static_cast<int64_t>(nb);
  if (nb == 0) return static_cast<int64_t>(na);
  // Three rolling rows; transposition looks two rows back.
  std::vector<int32_t> prev2(nb + 1), prev(nb + 1), cur(nb + 1);
  for (size_t j = 0; j <= nb; ++j) prev[j] = static_cast<int32_t>(j);
  for (size_t i = 1; i <= na; ++i) {
    cur[0] = static_cast<int32_t>(i);
    const char ai = a[i - 1];
    for (size_t j = 1; j <= nb; ++j) {
      int32_t best = prev[j - 1] + (ai == b[j - 1] ? 0 : 1);
      best = std::min(best, prev[j] + 1);
      best = std::min(best, cur[j - 1] + 1);
      if (i > 1 && j > 1 && ai == b[j - 2] && a[i - 2] == b[j - 1])
        best = std::min(best, prev2[j - 2] + 1);
      cur[j] = best;
    }
    std::swap(prev2, prev);
    std::swap(prev, cur);
  }
  return prev[nb];
}

double dist_osad(const DirectionString& a, const DirectionString& b) {
  if (a.empty() || b.empty()) throw Error("osad distance on empty string");
  double d = static_cast<double>(osa(a, b));
  double m = static_cast<double>(std::min(a.size(), b.size()));
  return 1.0 - std::exp(-2.0 * d * d / m);
}

double dist_weighted_l1(const FeatureVector& a, const FeatureVector& b,
                        std::span<const double> weights) {
  if (a.size() != b.size() || a.size() != weights.size())
    throw Error("weighted L1 length mismatch");
  return kernels::weighted_l1(a.data(), b.data(), weights.data(), a.size());
}

// --- DistanceEvaluator -------------------------------------------------------

namespace {

DirectionString truncated_dirstr(const PacketSequence& seq, size_t max_len) {
  DirectionString s = repr_direction_string(seq);
  if (s.size() > max_len) s.resize(max_len);
  return s;
}

}  // namespace

DistanceEvaluator::DistanceEvaluator(DistanceKind kind,
                                     const std::vector<const PacketSequence*>& traces)
    : kind_(std::move(kind)), n_(traces.size()) {
  kind_.validate();
  switch (kind_.id) {
    case DistanceKindId::XCORR:
      xcorr_.reserve(n_);
      for (auto* t : traces) xcorr_.push_back(repr_xcorr(*t));
      break;
    case DistanceKindId::PA_SVM_RBF:
      features_.reserve(n_);
      for (auto* t : traces) features_.push_back(repr_catalog(*t, FeatureCatalog::PA_SVM));
      break;
    case DistanceKindId::WKNN_L1:
      features_.reserve(n_);
      for (auto* t : traces) features_.push_back(repr_catalog(*t, FeatureCatalog::WA_KNN));
      break;
    case DistanceKindId::CUMUL_RBF:
      features_.reserve(n_);
      for (auto* t : traces) features_.push_back(repr_cumul(*t));
      break;
    case DistanceKindId::OSAD:
      dirstr_.reserve(n_);
      for (auto* t : traces) dirstr_.push_back(truncated_dirstr(*t, kind_.osad_max_len));
      break;
  }
}

DistanceEvaluator::Prepared DistanceEvaluator::prepare(const PacketSequence& seq) const {
  Prepared p;
  switch (kind_.id) {
    case DistanceKindId::XCORR: p.xcorr = repr_xcorr(seq); break;
    case DistanceKindId::PA_SVM_RBF: p.features = repr_catalog(seq, FeatureCatalog::PA_SVM); break;
    case DistanceKindId::WKNN_L1: p.features = repr_catalog(seq, FeatureCatalog::WA_KNN); break;
    case DistanceKindId::CUMUL_RBF: p.features = repr_cumul(seq); break;
    case DistanceKindId::OSAD: p.dirstr = truncated_dirstr(seq, kind_.osad_max_len); break;
  }
  return p;
}

double DistanceEvaluator::between(size_t i, size_t j) const {
  switch (kind_.id) {
    case DistanceKindId::XCORR: return dist_xcorr(xcorr_[i], xcorr_[j]);
    case DistanceKindId::PA_SVM_RBF:
    case DistanceKindId::CUMUL_RBF: return dist_rbf(features_[i], features_[j], kind_.gamma);
    case DistanceKindId::WKNN_L1: return dist_weighted_l1(features_[i], features_[j], kind_.weights);
    case DistanceKindId::OSAD: return dist_osad(dirstr_[i], dirstr_[j]);
  }
  return 0.0;
}

double DistanceEvaluator::to_member(const Prepared& p, size_t j) const {
  switch (kind_.id) {
    case DistanceKindId::XCORR: return dist_xcorr(p.xcorr, xcorr_[j]);
    case DistanceKindId::PA_SVM_RBF:
    case DistanceKindId::CUMUL_RBF: return dist_rbf(p.features, features_[j], kind_.gamma);
    case DistanceKindId::WKNN_L1: return dist_weighted_l1(p.features, features_[j], kind_.weights);
    case DistanceKindId::OSAD: return dist_osad(p.dirstr, dirstr_[j]);
  }
  return 0.0;
}

double aggregate_class_distance(std::vector<double> dists, ClassDistanceVariant variant) {
  if (dists.empty()) throw Error("class distance over empty class");
  size_t c = dists.size();
  auto need = [&](size_t k) {
    if (c < k)
      throw Error("class distance variant needs |C| >= " + std::to_string(k) + ", got " +
                  std::to_string(c));
  };
  switch (variant) {
    case ClassDistanceVariant::MEAN_ALL: {
      double s = 0.0;
      for (double d : dists) s += d;
      return s / static_cast<double>(c);
    }
    case ClassDistanceVariant::TOP5_OVER_C: {
      need(5);
      std::partial_sort(dists.begin(), dists.begin() + 5, dists.end());
      double s = 0.0;
      for (size_t i = 0; i < 5; ++i) s += dists[i];
      return s / static_cast<double>(c);  // divisor is |C|, not the top-k count
    }
    case ClassDistanceVariant::TOP25_OVER_C: {
      need(25);
      std::partial_sort(dists.begin(), dists.begin() + 25, dists.end());
      double s = 0.0;
      for (size_t i = 0; i < 25; ++i) s += dists[i];
      return s / static_cast<double>(c);
    }
    case ClassDistanceVariant::NEAREST:
      return *std::min_element(dists.begin(), dists.end());
    case ClassDistanceVariant::FIFTH_NEAREST: {
      need(5);
      std::nth_element(dists.begin(), dists.begin() + 4, dists.end());
      return dists[4];
    }
    case ClassDistanceVariant::TWENTYFIFTH_NEAREST: {
      need(25);
      std::nth_element(dists.begin(), dists.begin() + 24, dists.end());
      return dists[24];
    }
  }
  throw Error("bad class distance variant");
}

double dist_to_class(const PacketSequence& seq, const std::vector<const PacketSequence*>& cls,
                     const DistanceKind& kind, ClassDistanceVariant variant) {
  DistanceEvaluator eval(kind, cls);
  auto p = eval.prepare(seq);
  std::vector<double> dists(cls.size());
  for (size_t j = 0; j < cls.size(); ++j) dists[j] = eval.to_member(p, j);
  return aggregate_class_distance(std::move(dists), variant);
}

// --- binary matrix container -------------------------------------------------

namespace {
constexpr char kMatrixMagic[4] = {'O', 'W', 'F', 'D'};
}

void save_distance_matrix(const DistanceMatrix& m, const std::string& path) {
  if (m.values.size() != static_cast<size_t>(m.rows) * m.cols)
    throw Error("distance matrix size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMatrixMagic, 4);
  uint8_t kind = static_cast<uint8_t>(m.kind);
  out.write(reinterpret_cast<const char*>(&kind), 1);
  out.write(reinterpret_cast<const char*>(&m.params_digest), 8);
  out.write(reinterpret_cast<const char*>(&m.rows), 4);
  out.write(reinterpret_cast<const char*>(&m.cols), 4);
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

DistanceMatrix load_distance_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMatrixMagic, 4) != 0)
    throw IoError("not a distance matrix file: " + path);
  DistanceMatrix m;
  uint8_t kind = 0;
  in.read(reinterpret_cast<char*>(&kind), 1);
  m.kind = static_cast<DistanceKindId>(kind);
  in.read(reinterpret_cast<char*>(&m.params_digest), 8);
  in.read(reinterpret_cast<char*>(&m.rows), 4);
  in.read(reinterpret_cast<char*>(&m.cols), 4);
  if (!in) throw IoError("truncated distance matrix: " + path);
  m.values.resize(static_cast<size_t>(m.rows) * m.cols);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!in) throw IoError("truncated distance matrix: " + path);
  return m;
}

}  // namespace owf
