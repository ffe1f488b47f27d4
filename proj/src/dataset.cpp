#include "owf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "owf/rng.hpp"

namespace fs = std::filesystem;

namespace owf {

std::string DatasetSpec::to_string() const {
  return std::to_string(n_monitored) + "x" + std::to_string(n_instances) + "+" +
         std::to_string(n_unmonitored);
}

DatasetSpec parse_spec(const std::string& text) {
  auto fail = [&] { throw ParseError("malformed dataset spec: '" + text + "'"); };
  size_t x = text.find('x');
  size_t plus = text.find('+');
  if (x == std::string::npos || plus == std::string::npos || plus < x) fail();
  auto parse_int = [&](size_t begin, size_t end) -> int64_t {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data() + begin, text.data() + end, v);
    if (ec == std::errc::result_out_of_range)
      throw ParseError("dataset spec overflow: '" + text + "'");
    if (ec != std::errc() || p != text.data() + end || v < 0) fail();
    return v;
  };
  DatasetSpec spec;
  spec.n_monitored = parse_int(0, x);
  spec.n_instances = parse_int(x + 1, plus);
  spec.n_unmonitored = parse_int(plus + 1, text.size());
  if (spec.n_monitored > 0 && spec.n_instances == 0) fail();
  return spec;
}

int64_t Dataset::min_instances() const {
  int64_t m = 0;
  bool first = true;
  for (const auto& [page, traces] : monitored) {
    int64_t n = static_cast<int64_t>(traces.size());
    if (first || n < m) m = n;
    first = false;
  }
  return m;
}

int64_t Dataset::total_elements() const {
  int64_t n = static_cast<int64_t>(unmonitored.size());
  for (const auto& [page, traces] : monitored) n += static_cast<int64_t>(traces.size());
  return n;
}

DatasetSpec Dataset::shape() const {
  return DatasetSpec{monitored_pages(), min_instances(),
                     static_cast<int64_t>(unmonitored.size())};
}

void Dataset::validate() const {
  for (const auto& [page, traces] : monitored) {
    if (traces.empty())
      throw Error("monitored page " + std::to_string(page) + " has no instances");
    for (const auto& t : traces)
      if (t.empty()) throw Error("empty trace in page " + std::to_string(page));
  }
  for (const auto& t : unmonitored)
    if (t.empty()) throw Error("empty unmonitored trace");
}

namespace {

// Sample `take` distinct indices from [0, n), deterministic in rng state.
std::vector<size_t> sample_indices(size_t n, size_t take, Rng& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  // Partial Fisher-Yates: the first `take` slots end up uniform.
  for (size_t i = 0; i < take; ++i) {
    size_t j = i + rng.index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());  // preserve original order within the sample
  return idx;
}

}  // namespace

Dataset subset(const Dataset& dataset, const DatasetSpec& spec, uint64_t seed) {
  if (spec.n_monitored > dataset.monitored_pages())
    throw Error("subset: spec wants " + std::to_string(spec.n_monitored) + " pages, dataset has " +
                std::to_string(dataset.monitored_pages()));
  if (spec.n_monitored > 0 && spec.n_instances > dataset.min_instances())
    throw Error("subset: spec wants " + std::to_string(spec.n_instances) +
                " instances/page, dataset min is " + std::to_string(dataset.min_instances()));
  if (spec.n_unmonitored > static_cast<int64_t>(dataset.unmonitored.size()))
    throw Error("subset: spec wants " + std::to_string(spec.n_unmonitored) +
                " unmonitored traces, dataset has " + std::to_string(dataset.unmonitored.size()));

  Rng rng(mix64(seed, 0x5b5e7a11));
  std::vector<int> pages;
  pages.reserve(dataset.monitored.size());
  for (const auto& [page, traces] : dataset.monitored) pages.push_back(page);
  auto keep_pages = sample_indices(pages.size(), static_cast<size_t>(spec.n_monitored), rng);

  Dataset out;
  for (size_t pi : keep_pages) {
    int page = pages[pi];
    const auto& traces = dataset.monitored.at(page);
    Rng page_rng(mix64(seed, 0x7013c2d9, static_cast<uint64_t>(page)));
    auto keep = sample_indices(traces.size(), static_cast<size_t>(spec.n_instances), page_rng);
    auto& dst = out.monitored[page];
    dst.reserve(keep.size());
    for (size_t i : keep) dst.push_back(traces[i]);
  }
  Rng un_rng(mix64(seed, 0x2f8a1c3b));
  auto keep_un = sample_indices(dataset.unmonitored.size(),
                                static_cast<size_t>(spec.n_unmonitored), un_rng);
  out.unmonitored.reserve(keep_un.size());
  for (size_t i : keep_un) out.unmonitored.push_back(dataset.unmonitored[i]);
  return out;
}

FoldAssignment assign_folds(const Dataset& dataset, int k, uint64_t seed) {
  if (k < 2) throw Error("fold count must be >= 2");
  if (dataset.monitored_pages() > 0 && dataset.min_instances() < k)
    throw Error("fold count " + std::to_string(k) + " exceeds min instance count " +
                std::to_string(dataset.min_instances()));

  FoldAssignment fa;
  fa.k = k;
  // Round-robin over a shuffled order spreads instances as evenly as possible:
  // counts per fold differ by at most one.
  auto spread = [&](size_t n, Rng& rng) {
    std::vector<int> folds(n);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    for (size_t i = 0; i < n; ++i) folds[order[i]] = static_cast<int>(i % k);
    return folds;
  };
  for (const auto& [page, traces] : dataset.monitored) {
    Rng rng(mix64(seed, 0xf01d5eed, static_cast<uint64_t>(page)));
    fa.monitored[page] = spread(traces.size(), rng);
  }
  Rng rng(mix64(seed, 0xf01dbeef));
  fa.unmonitored = spread(dataset.unmonitored.size(), rng);
  return fa;
}

Dataset FoldAssignment::train_of(const Dataset& dataset, int fold) const {
  Dataset out;
  for (const auto& [page, traces] : dataset.monitored) {
    const auto& folds = monitored.at(page);
    auto& dst = out.monitored[page];
    for (size_t i = 0; i < traces.size(); ++i)
      if (folds[i] != fold) dst.push_back(traces[i]);
  }
  for (size_t i = 0; i < dataset.unmonitored.size(); ++i)
    if (unmonitored[i] != fold) out.unmonitored.push_back(dataset.unmonitored[i]);
  return out;
}

Dataset FoldAssignment::test_of(const Dataset& dataset, int fold) const {
  Dataset out;
  for (const auto& [page, traces] : dataset.monitored) {
    const auto& folds = monitored.at(page);
    auto& dst = out.monitored[page];
    for (size_t i = 0; i < traces.size(); ++i)
      if (folds[i] == fold) dst.push_back(traces[i]);
    if (dst.empty()) out.monitored.erase(page);
  }
  for (size_t i = 0; i < dataset.unmonitored.size(); ++i)
    if (unmonitored[i] == fold) out.unmonitored.push_back(dataset.unmonitored[i]);
  return out;
}

std::vector<std::pair<Dataset, Dataset>> stratified_folds(const Dataset& dataset, int k,
                                                          uint64_t seed) {
  FoldAssignment fa = assign_folds(dataset, k, seed);
  std::vector<std::pair<Dataset, Dataset>> out;
  out.reserve(k);
  for (int f = 0; f < k; ++f)
    out.emplace_back(fa.train_of(dataset, f), fa.test_of(dataset, f));
  return out;
}

Dataset cap_training(const Dataset& train, int64_t max_elements, uint64_t seed) {
  int64_t pages = train.monitored_pages();
  if (max_elements < pages)
    throw Error("cap_training: max_elements " + std::to_string(max_elements) +
                " below page count " + std::to_string(pages));
  int64_t total = train.total_elements();
  if (total <= max_elements) return train;

  double scale = static_cast<double>(max_elements) / static_cast<double>(total);
  Dataset out;
  int64_t used = 0;
  for (const auto& [page, traces] : train.monitored) {
    int64_t keep = std::max<int64_t>(
        1, static_cast<int64_t>(static_cast<double>(traces.size()) * scale));
    keep = std::min<int64_t>(keep, static_cast<int64_t>(traces.size()));
    Rng rng(mix64(seed, 0xca9d00c5, static_cast<uint64_t>(page)));
    auto idx = sample_indices(traces.size(), static_cast<size_t>(keep), rng);
    auto& dst = out.monitored[page];
    for (size_t i : idx) dst.push_back(traces[i]);
    used += keep;
  }
  int64_t budget = max_elements - used;
  int64_t keep_un = std::min<int64_t>(
      budget, static_cast<int64_t>(static_cast<double>(train.unmonitored.size()) * scale));
  keep_un = std::max<int64_t>(keep_un, 0);
  Rng rng(mix64(seed, 0xca9dffff));
  auto idx = sample_indices(train.unmonitored.size(), static_cast<size_t>(keep_un), rng);
  for (size_t i : idx) out.unmonitored.push_back(train.unmonitored[i]);
  return out;
}

// --- directory IO ------------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const std::string& dir) {
  fs::path path = fs::path(dir) / "MANIFEST";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    ManifestEntry e;
    if (kind == "monitored") {
      e.is_monitored = true;
      if (!(ss >> e.page >> e.instance >> e.file))
        throw ParseError("bad manifest line " + std::to_string(line_no));
    } else if (kind == "unmonitored") {
      e.is_monitored = false;
      if (!(ss >> e.page >> e.file))
        throw ParseError("bad manifest line " + std::to_string(line_no));
      ss >> e.hostname;  // optional
    } else {
      throw ParseError("bad manifest line " + std::to_string(line_no) + ": '" + line + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace {

std::string normalize_hostname(std::string h) {
  std::transform(h.begin(), h.end(), h.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (h.rfind("www.", 0) == 0) h = h.substr(4);
  return h;
}

}  // namespace

std::vector<ManifestEntry> dedup_similar_domains(std::vector<ManifestEntry> entries) {
  std::vector<std::string> seen;
  std::vector<ManifestEntry> out;
  out.reserve(entries.size());
  for (auto& e : entries) {
    if (e.is_monitored || e.hostname.empty()) {
      out.push_back(std::move(e));
      continue;
    }
    std::string h = normalize_hostname(e.hostname);
    bool dup = false;
    for (const auto& s : seen) {
      if (h.rfind(s, 0) == 0 || s.rfind(h, 0) == 0) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      seen.push_back(h);
      out.push_back(std::move(e));
    }
  }
  return out;
}

Dataset load_dataset_dir(const std::string& dir, bool dedup_domains) {
  auto entries = read_manifest(dir);
  if (dedup_domains) entries = dedup_similar_domains(std::move(entries));
  Dataset out;
  for (const auto& e : entries) {
    fs::path p = fs::path(dir) / e.file;
    std::string origin = e.is_monitored
                             ? std::to_string(e.page) + "-" + std::to_string(e.instance)
                             : (e.hostname.empty() ? std::to_string(e.page) : e.hostname);
    PacketSequence seq = load_trace_file(p.string(), origin);
    if (e.is_monitored)
      out.monitored[e.page].push_back(std::move(seq));
    else
      out.unmonitored.push_back(std::move(seq));
  }
  out.validate();
  return out;
}

void save_dataset_dir(const Dataset& dataset, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream mf(fs::path(dir) / "MANIFEST");
  if (!mf) throw IoError("cannot write manifest in " + dir);
  mf << "# owf dataset v1\n";
  for (const auto& [page, traces] : dataset.monitored) {
    for (size_t i = 0; i < traces.size(); ++i) {
      std::string name = std::to_string(page) + "-" + std::to_string(i);
      save_trace_file(traces[i], (fs::path(dir) / name).string());
      mf << "monitored " << page << " " << i << " " << name << "\n";
    }
  }
  int64_t next_id = dataset.monitored.empty() ? 0 : dataset.monitored.rbegin()->first + 1;
  for (size_t i = 0; i < dataset.unmonitored.size(); ++i) {
    std::string name = "u" + std::to_string(next_id + static_cast<int64_t>(i));
    save_trace_file(dataset.unmonitored[i], (fs::path(dir) / name).string());
    mf << "unmonitored " << next_id + static_cast<int64_t>(i) << " " << name;
    if (!dataset.unmonitored[i].origin.empty() &&
        dataset.unmonitored[i].origin.find(' ') == std::string::npos &&
        dataset.unmonitored[i].origin.find('/') == std::string::npos)
      mf << " " << dataset.unmonitored[i].origin;
    mf << "\n";
  }
  if (!mf) throw IoError("manifest write failed in " + dir);
}

}  // namespace owf
