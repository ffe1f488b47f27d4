#pragma once

#include <cstdint>

#include "owf/dataset.hpp"

namespace owf {

/// Desk-scale synthetic corpus. Every page gets a random profile: a cell
/// count (lognormal), a direction template with Markov burst structure, and a
/// per-position gap profile; instances perturb the template with symbol flips
/// and timing jitter. Byte-for-byte deterministic in (spec, seed).
Dataset synth_dataset(const DatasetSpec& spec, uint64_t seed);

}  // namespace owf
