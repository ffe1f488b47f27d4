#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "owf/trace.hpp"

namespace owf {

/// "AxB+C": A monitored pages, B instances each, C non-monitored pages
/// (one instance each).
struct DatasetSpec {
  int64_t n_monitored = 0;
  int64_t n_instances = 0;
  int64_t n_unmonitored = 0;

  std::string to_string() const;
};

/// Parse the "AxB+C" notation.
DatasetSpec parse_spec(const std::string& text);

struct Dataset {
  // page id -> instances; ordered so page iteration is deterministic.
  std::map<int, std::vector<PacketSequence>> monitored;
  std::vector<PacketSequence> unmonitored;

  int64_t monitored_pages() const { return static_cast<int64_t>(monitored.size()); }
  int64_t min_instances() const;
  int64_t total_elements() const;
  DatasetSpec shape() const;  // instances = min over pages
  void validate() const;      // throws on empty pages / empty instance lists
};

/// Deterministic subsample down to `spec` (pages, instances per page, and
/// unmonitored traces all sampled without replacement). Throws if the spec
/// exceeds the dataset's dimensions.
Dataset subset(const Dataset& dataset, const DatasetSpec& spec, uint64_t seed);

/// Fold assignment computed once; fold i's test set is the traces assigned i,
/// its train set is everything else. Instances of each monitored page and the
/// unmonitored traces are spread across folds as evenly as possible.
struct FoldAssignment {
  int k = 0;
  std::map<int, std::vector<int>> monitored;  // page -> fold index per instance
  std::vector<int> unmonitored;               // fold index per trace

  Dataset train_of(const Dataset& dataset, int fold) const;
  Dataset test_of(const Dataset& dataset, int fold) const;
};

FoldAssignment assign_folds(const Dataset& dataset, int k, uint64_t seed);

/// Materialized k-fold split. Test sets are pairwise disjoint and their union
/// is the dataset.
std::vector<std::pair<Dataset, Dataset>> stratified_folds(const Dataset& dataset, int k,
                                                          uint64_t seed);

/// Proportional downsample to at most max_elements, keeping at least one
/// instance of every monitored page. max_elements must be >= the page count.
Dataset cap_training(const Dataset& train, int64_t max_elements, uint64_t seed);

// --- directory layout -------------------------------------------------------
//
// A dataset directory holds one file per trace plus a MANIFEST:
//   monitored <page> <instance> <file>
//   unmonitored <id> <file> [hostname]
// Monitored files are conventionally named "<page>-<instance>", unmonitored
// files "<id>". Hostnames, when present, feed the ingest-time dedup.

struct ManifestEntry {
  bool is_monitored = false;
  int page = 0;
  int instance = 0;
  std::string file;
  std::string hostname;  // unmonitored only, may be empty
};

std::vector<ManifestEntry> read_manifest(const std::string& dir);

/// Drop unmonitored entries whose normalized hostname ("www." stripped,
/// lowercased) is a prefix of an earlier entry's hostname or vice versa.
/// Entries without hostnames are kept. First occurrence wins.
std::vector<ManifestEntry> dedup_similar_domains(std::vector<ManifestEntry> entries);

Dataset load_dataset_dir(const std::string& dir, bool dedup_domains = false);
void save_dataset_dir(const Dataset& dataset, const std::string& dir);

}  // namespace owf
