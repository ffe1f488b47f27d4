#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "owf/common.hpp"

namespace owf {

/// One Tor cell: time relative to the first cell of its sequence, and
/// direction (+1 out of the client, -1 into it). Cell size carries no
/// information in this setting, so it is not stored.
struct Cell {
  double time = 0.0;
  int8_t direction = 0;
};

/// An ordered page load. Invariants: non-empty, times non-decreasing, first
/// time zero (enforced by the parser / constructors that build these).
struct PacketSequence {
  std::vector<Cell> cells;
  std::string origin;  // optional page identifier, empty if unknown

  size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }
  double duration() const { return cells.empty() ? 0.0 : cells.back().time; }
};

/// Class label: a monitored page id, or the non-monitored (open-world) class.
class Label {
 public:
  static Label monitored(int page_id) { return Label(page_id); }
  static Label non_monitored() { return Label(-1); }
  Label() : page_(-1) {}

  bool is_monitored() const { return page_ >= 0; }
  int page_id() const { return page_; }

  friend bool operator==(Label a, Label b) { return a.page_ == b.page_; }
  friend bool operator!=(Label a, Label b) { return a.page_ != b.page_; }
  /// Ordering used for deterministic tie-breaks: ascending page id, with the
  /// non-monitored class after every monitored page.
  friend bool operator<(Label a, Label b) {
    if (a.is_monitored() != b.is_monitored()) return a.is_monitored();
    return a.page_ < b.page_;
  }

  std::string to_string() const;

 private:
  explicit Label(int page) : page_(page) {}
  int page_;
};

/// Parse one trace file: one cell per line, "<seconds><TAB><signed int>".
/// The integer's sign is the direction; its magnitude is discarded.
/// Timestamps are shifted so the first cell is at 0. Throws ParseError on
/// empty input, malformed lines, or decreasing timestamps.
PacketSequence parse_trace(std::string_view text, std::string origin = {});

/// Inverse of parse_trace; timestamps round-trip within 1e-9.
std::string serialize_trace(const PacketSequence& seq);

PacketSequence load_trace_file(const std::string& path, std::string origin = {});
void save_trace_file(const PacketSequence& seq, const std::string& path);

}  // namespace owf
