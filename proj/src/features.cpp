#include "owf/features.hpp"

#include <cmath>
#include <cstdio>

#include "owf/common.hpp"

namespace owf {

namespace {

constexpr size_t kBaseCatalogLength = 227;
constexpr size_t kCumulLength = 104;
constexpr size_t kFirstOutgoing = 20;
constexpr size_t kWindowCount = 100;
constexpr size_t kWindowSize = 30;
constexpr size_t kCumSamples = 100;
constexpr size_t kCumStride = 50;

void require_nonempty(const PacketSequence& seq) {
  if (seq.empty()) throw Error("representation of empty packet sequence");
}

}  // namespace

const char* catalog_name(FeatureCatalog c) {
  switch (c) {
    case FeatureCatalog::PA_SVM: return "pasvm";
    case FeatureCatalog::WA_KNN: return "waknn";
    case FeatureCatalog::HA_KFP: return "hakfp";
    case FeatureCatalog::PA_CUMUL: return "pacumul";
  }
  return "?";
}

size_t catalog_length(FeatureCatalog c) {
  return c == FeatureCatalog::PA_CUMUL ? kCumulLength : kBaseCatalogLength;
}

XCorrRepr repr_xcorr(const PacketSequence& seq) {
  require_nonempty(seq);
  XCorrRepr r;
  r.times.resize(seq.size());
  r.lengths.resize(seq.size());
  r.times[0] = 0.0;  // t_1 has no predecessor
  r.lengths[0] = seq.cells[0].direction;
  for (size_t i = 1; i < seq.size(); ++i) {
    r.times[i] = seq.cells[i].time - seq.cells[i - 1].time;
    r.lengths[i] = seq.cells[i].direction;
  }
  return r;
}

FeatureVector repr_cumul(const PacketSequence& seq) {
  require_nonempty(seq);
  size_t n = seq.size();
  std::vector<double> cum(n);
  double c = 0.0;
  size_t n_out = 0;
  for (size_t i = 0; i < n; ++i) {
    c += seq.cells[i].direction;
    cum[i] = c;
    if (seq.cells[i].direction > 0) ++n_out;
  }
  FeatureVector fv;
  fv.catalog_id = FeatureCatalog::PA_CUMUL;
  fv.values.reserve(kCumulLength);
  fv.values.push_back(static_cast<double>(n_out));
  fv.values.push_back(static_cast<double>(n - n_out));
  fv.values.push_back(seq.duration());
  fv.values.push_back(static_cast<double>(n));
  // Nodes sit at integer positions 1..n with values cum[0..n-1]; positions
  // below 1 clamp to the first node so a single-cell trace samples flat.
  for (size_t m = 1; m <= kCumSamples; ++m) {
    double p = static_cast<double>(m) * static_cast<double>(n) / 100.0;
    double v;
    if (p <= 1.0) {
      v = cum[0];
    } else {
      size_t lo = static_cast<size_t>(p);  // floor, >= 1
      if (lo >= n) {
        v = cum[n - 1];
      } else {
        double frac = p - static_cast<double>(lo);
        v = cum[lo - 1] + frac * (cum[lo] - cum[lo - 1]);
      }
    }
    fv.values.push_back(v);
  }
  return fv;
}

DirectionString repr_direction_string(const PacketSequence& seq) {
  require_nonempty(seq);
  DirectionString s;
  s.reserve(seq.size());
  for (const auto& c : seq.cells) s.push_back(c.direction > 0 ? 'O' : 'I');
  return s;
}

FeatureVector repr_catalog(const PacketSequence& seq, FeatureCatalog catalog) {
  require_nonempty(seq);
  if (catalog == FeatureCatalog::PA_CUMUL) return repr_cumul(seq);

  size_t n = seq.size();
  FeatureVector fv;
  fv.catalog_id = catalog;
  fv.values.assign(kBaseCatalogLength, 0.0);
  double* f = fv.values.data();

  size_t n_out = 0;
  for (const auto& c : seq.cells)
    if (c.direction > 0) ++n_out;
  f[0] = static_cast<double>(n);
  f[1] = static_cast<double>(n_out);
  f[2] = static_cast<double>(n - n_out);
  f[3] = seq.duration();

  size_t found = 0;
  for (size_t i = 0; i < n && found < kFirstOutgoing; ++i)
    if (seq.cells[i].direction > 0) f[4 + found++] = static_cast<double>(i + 1);

  for (size_t w = 0; w < kWindowCount; ++w) {
    size_t begin = w * kWindowSize;
    if (begin >= n) break;
    size_t end = std::min(begin + kWindowSize, n);
    size_t in_count = 0;
    for (size_t i = begin; i < end; ++i)
      if (seq.cells[i].direction < 0) ++in_count;
    f[24 + w] = static_cast<double>(in_count);
  }

  // Bursts: maximal runs of equal direction.
  size_t bursts = 0;
  size_t out_bursts = 0;
  size_t out_total = 0, out_max = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && seq.cells[j].direction == seq.cells[i].direction) ++j;
    ++bursts;
    if (seq.cells[i].direction > 0) {
      ++out_bursts;
      out_total += j - i;
      out_max = std::max(out_max, j - i);
    }
    i = j;
  }
  f[124] = static_cast<double>(bursts);
  f[125] = out_bursts ? static_cast<double>(out_total) / static_cast<double>(out_bursts) : 0.0;
  f[126] = static_cast<double>(out_max);

  double c = 0.0;
  for (size_t k = 0; k < n; ++k) {
    c += seq.cells[k].direction;
    size_t pos = k + 1;
    if (pos % kCumStride == 0) {
      size_t sample = pos / kCumStride;
      if (sample <= kCumSamples) f[127 + sample - 1] = c;
    }
  }
  return fv;
}

std::string features_to_csv(const std::vector<PacketSequence>& traces, FeatureCatalog catalog) {
  std::string out = "origin,catalog";
  size_t len = catalog_length(catalog);
  for (size_t i = 0; i < len; ++i) out += ",f" + std::to_string(i);
  out += "\n";
  char buf[32];
  for (const auto& t : traces) {
    FeatureVector fv = repr_catalog(t, catalog);
    out += t.origin.empty() ? "-" : t.origin;
    out += ",";
    out += catalog_name(catalog);
    for (double v : fv.values) {
      snprintf(buf, sizeof(buf), ",%.10g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace owf
