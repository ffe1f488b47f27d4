#include "owf/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "owf/common.hpp"
#include "owf/rng.hpp"

namespace owf {

void DefenseConfig::validate() const {
  if (kind == DefenseKind::RANDOM_PADDING) {
    if (bandwidth_overhead < 0.0 || time_overhead < 0.0)
      throw ConfigError("random padding overhead targets must be >= 0");
  } else {
    if (rho_out <= 0.0 || rho_in <= 0.0) throw ConfigError("constant rate needs rho > 0");
    if (block < 1) throw ConfigError("constant rate needs block >= 1");
  }
}

DefenseConfig DefenseConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open defense config: " + path);
  DefenseConfig cfg;
  std::string line;
  bool kind_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("bad defense config line: " + line);
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "kind") {
      if (value == "random_padding")
        cfg.kind = DefenseKind::RANDOM_PADDING;
      else if (value == "constant_rate")
        cfg.kind = DefenseKind::CONSTANT_RATE;
      else
        throw ConfigError("unknown defense kind: " + value);
      kind_seen = true;
    } else if (key == "bandwidth_overhead") {
      cfg.bandwidth_overhead = std::stod(value);
    } else if (key == "time_overhead") {
      cfg.time_overhead = std::stod(value);
    } else if (key == "rho_out") {
      cfg.rho_out = std::stod(value);
    } else if (key == "rho_in") {
      cfg.rho_in = std::stod(value);
    } else if (key == "block") {
      cfg.block = std::stoll(value);
    } else {
      throw ConfigError("unknown defense config key: " + key);
    }
  }
  if (!kind_seen) throw ConfigError("defense config missing 'kind'");
  cfg.validate();
  return cfg;
}

namespace {

struct TaggedCell {
  double time;
  int8_t direction;
  uint8_t real;
  // Stable sort key so real-cell order survives equal timestamps.
  bool operator<(const TaggedCell& o) const { return time < o.time; }
};

DefendedTrace finish(std::vector<TaggedCell> cells) {
  std::stable_sort(cells.begin(), cells.end());
  DefendedTrace out;
  out.trace.cells.reserve(cells.size());
  out.is_real.reserve(cells.size());
  double t0 = cells.empty() ? 0.0 : cells.front().time;
  for (const auto& c : cells) {
    out.trace.cells.push_back(Cell{c.time - t0, c.direction});
    out.is_real.push_back(c.real);
  }
  return out;
}

DefendedTrace random_padding(const PacketSequence& seq, const DefenseConfig& cfg, uint64_t seed) {
  Rng rng(mix64(seed, 0xdef3a5e1));
  std::vector<TaggedCell> cells;
  size_t n = seq.size();
  cells.reserve(n + n / 2 + 1);
  // Stretch: each inter-cell gap grows by the time-overhead factor.
  double t = 0.0;
  double stretch = 1.0 + cfg.time_overhead;
  cells.push_back(TaggedCell{0.0, seq.cells[0].direction, 1});
  for (size_t i = 1; i < n; ++i) {
    t += (seq.cells[i].time - seq.cells[i - 1].time) * stretch;
    cells.push_back(TaggedCell{t, seq.cells[i].direction, 1});
  }
  double duration = t;
  auto dummies = static_cast<size_t>(
      std::ceil(cfg.bandwidth_overhead * static_cast<double>(n) - 1e-9));
  for (size_t i = 0; i < dummies; ++i) {
    double when = duration > 0.0 ? rng.uniform(0.0, duration) : 0.0;
    int8_t dir = rng.bernoulli(0.5) ? int8_t{1} : int8_t{-1};
    cells.push_back(TaggedCell{when, dir, 0});
  }
  return finish(std::move(cells));
}

DefendedTrace constant_rate(const PacketSequence& seq, const DefenseConfig& cfg) {
  std::vector<TaggedCell> cells;
  for (int dir = 0; dir < 2; ++dir) {
    int8_t d = dir == 0 ? int8_t{1} : int8_t{-1};
    double rho = dir == 0 ? cfg.rho_out : cfg.rho_in;
    // Assign each real cell the next free slot at or after its arrival.
    std::vector<int64_t> slots;
    int64_t last = -1;
    for (const auto& c : seq.cells) {
      if (c.direction != d) continue;
      auto k = static_cast<int64_t>(std::ceil(c.time / rho - 1e-9));
      if (k <= last) k = last + 1;
      slots.push_back(k);
      last = k;
    }
    if (slots.empty()) continue;  // an absent direction transmits nothing
    // Emit every slot from 0 through the end, padded to a block multiple.
    int64_t count = last + 1;
    int64_t padded = (count + cfg.block - 1) / cfg.block * cfg.block;
    size_t next_real = 0;
    for (int64_t k = 0; k < padded; ++k) {
      bool real = next_real < slots.size() && slots[next_real] == k;
      if (real) ++next_real;
      cells.push_back(TaggedCell{static_cast<double>(k) * rho, d, real ? uint8_t{1} : uint8_t{0}});
    }
  }
  return finish(std::move(cells));
}

}  // namespace

DefendedTrace apply_defense_tagged(const PacketSequence& seq, const DefenseConfig& cfg,
                                   uint64_t seed) {
  if (seq.empty()) throw Error("apply_defense on empty trace");
  cfg.validate();
  if (cfg.kind == DefenseKind::RANDOM_PADDING) return random_padding(seq, cfg, seed);
  return constant_rate(seq, cfg);
}

PacketSequence apply_defense(const PacketSequence& seq, const DefenseConfig& cfg, uint64_t seed) {
  DefendedTrace d = apply_defense_tagged(seq, cfg, seed);
  d.trace.origin = seq.origin;
  return std::move(d.trace);
}

OverheadReport measure_overhead(const PacketSequence& original, const PacketSequence& defended) {
  if (original.empty()) throw Error("measure_overhead: empty original");
  OverheadReport r;
  double n0 = static_cast<double>(original.size());
  r.bandwidth_overhead = (static_cast<double>(defended.size()) - n0) / n0;
  double t0 = original.duration();
  if (t0 > 0.0) r.time_overhead = (defended.duration() - t0) / t0;
  return r;
}

}  // namespace owf
