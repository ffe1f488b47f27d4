#include "owf/synth.hpp"

#include <algorithm>
#include <cmath>

#include "owf/rng.hpp"

namespace owf {

namespace {

struct PageProfile {
  size_t base_len;
  std::vector<int8_t> template_dirs;
  std::vector<double> gap_profile;
  double flip_noise;
  double len_jitter;
  double gap_jitter;
};

PageProfile make_profile(uint64_t seed, uint64_t page_key) {
  Rng rng(mix64(seed, 0x5717a6e5, page_key));
  PageProfile p;
  p.base_len = static_cast<size_t>(std::clamp(rng.lognormal(std::log(170.0), 0.35), 40.0, 900.0));
  size_t tpl_len = p.base_len + p.base_len / 2 + 8;
  // Markov direction chain: pages differ in stickiness and outgoing share.
  double p_stay = rng.uniform(0.55, 0.92);
  double p_out = rng.uniform(0.15, 0.5);
  p.template_dirs.resize(tpl_len);
  int8_t cur = rng.bernoulli(p_out) ? int8_t{1} : int8_t{-1};
  for (size_t i = 0; i < tpl_len; ++i) {
    p.template_dirs[i] = cur;
    if (!rng.bernoulli(p_stay)) {
      // Direction change biased by the page's outgoing share.
      cur = rng.bernoulli(cur > 0 ? 1.0 - p_out : p_out) ? static_cast<int8_t>(-cur) : cur;
      if (cur == p.template_dirs[i]) cur = static_cast<int8_t>(-cur);
    }
  }
  double base_gap = rng.uniform(0.002, 0.02);
  p.gap_profile.resize(tpl_len);
  for (size_t i = 0; i < tpl_len; ++i) p.gap_profile[i] = base_gap * rng.lognormal(0.0, 0.6);
  // Same-page loads keep most of their cell structure; the edit distance
  // between two instances stays well below the cross-page level even on
  // short traces.
  p.flip_noise = rng.uniform(0.01, 0.04);
  p.len_jitter = 0.025;
  p.gap_jitter = 0.3;
  return p;
}

PacketSequence make_instance(const PageProfile& p, uint64_t seed, uint64_t page_key,
                             uint64_t instance, std::string origin) {
  Rng rng(mix64(mix64(seed, 0x1257a2ce, page_key), instance));
  double len_scale = rng.lognormal(0.0, p.len_jitter);
  size_t n = static_cast<size_t>(
      std::clamp(static_cast<double>(p.base_len) * len_scale, 20.0,
                 static_cast<double>(p.template_dirs.size())));
  PacketSequence seq;
  seq.origin = std::move(origin);
  seq.cells.reserve(n);
  double t = 0.0;
  for (size_t i = 0; i < n; ++i) {
    int8_t dir = p.template_dirs[i];
    if (rng.bernoulli(p.flip_noise)) dir = static_cast<int8_t>(-dir);
    if (i > 0) t += p.gap_profile[i] * rng.lognormal(0.0, p.gap_jitter);
    seq.cells.push_back(Cell{t, dir});
  }
  return seq;
}

}  // namespace

Dataset synth_dataset(const DatasetSpec& spec, uint64_t seed) {
  Dataset out;
  for (int64_t page = 0; page < spec.n_monitored; ++page) {
    PageProfile profile = make_profile(seed, static_cast<uint64_t>(page));
    auto& traces = out.monitored[static_cast<int>(page)];
    traces.reserve(static_cast<size_t>(spec.n_instances));
    for (int64_t inst = 0; inst < spec.n_instances; ++inst) {
      traces.push_back(make_instance(profile, seed, static_cast<uint64_t>(page),
                                     static_cast<uint64_t>(inst),
                                     std::to_string(page) + "-" + std::to_string(inst)));
    }
  }
  out.unmonitored.reserve(static_cast<size_t>(spec.n_unmonitored));
  for (int64_t u = 0; u < spec.n_unmonitored; ++u) {
    uint64_t page_key = 0x80000000ull + static_cast<uint64_t>(u);
    PageProfile profile = make_profile(seed, page_key);
    out.unmonitored.push_back(
        make_instance(profile, seed, page_key, 0, "u" + std::to_string(u)));
  }
  return out;
}

}  // namespace owf
