#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "owf/trace.hpp"

namespace owf {

enum class DefenseKind { RANDOM_PADDING, CONSTANT_RATE };

struct DefenseConfig {
  DefenseKind kind = DefenseKind::RANDOM_PADDING;
  // RANDOM_PADDING: stretch gaps by (1 + time_overhead), insert
  // ceil(bandwidth_overhead * n) dummies at uniform times and directions.
  double bandwidth_overhead = 0.5;
  double time_overhead = 0.5;
  // CONSTANT_RATE: per-direction release slots every rho seconds, dummies in
  // every empty slot, per-direction counts padded to a multiple of block size.
  double rho_out = 0.02;
  double rho_in = 0.005;
  int64_t block = 100;

  void validate() const;
  static DefenseConfig parse_file(const std::string& path);
};

struct OverheadReport {
  double bandwidth_overhead = 0.0;
  std::optional<double> time_overhead;  // absent for zero-duration originals
};

struct DefendedTrace {
  PacketSequence trace;
  std::vector<uint8_t> is_real;  // parallel to trace.cells
};

/// Real cells are never dropped or reordered; timestamps are non-decreasing
/// and renormalized to start at 0.
DefendedTrace apply_defense_tagged(const PacketSequence& seq, const DefenseConfig& cfg,
                                   uint64_t seed);

PacketSequence apply_defense(const PacketSequence& seq, const DefenseConfig& cfg, uint64_t seed);

OverheadReport measure_overhead(const PacketSequence& original, const PacketSequence& defended);

}  // namespace owf
