#include "owf/trace.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace owf {

std::string Label::to_string() const {
  return is_monitored() ? std::to_string(page_) : std::string("nonmon");
}

namespace {

// Parses "<float><TAB><signed int>". Returns false on any malformed content.
bool parse_line(std::string_view line, double* time, int* dir) {
  size_t tab = line.find('\t');
  if (tab == std::string_view::npos || tab == 0 || tab + 1 >= line.size()) return false;
  std::string ts(line.substr(0, tab));
  std::string sz(line.substr(tab + 1));
  char* end = nullptr;
  *time = std::strtod(ts.c_str(), &end);
  if (end != ts.c_str() + ts.size()) return false;
  errno = 0;
  end = nullptr;
  long v = std::strtol(sz.c_str(), &end, 10);
  if (errno != 0 || end != sz.c_str() + sz.size()) return false;
  if (v == 0) return false;  // direction needs a sign
  *dir = v > 0 ? 1 : -1;
  return true;
}

}  // namespace

PacketSequence parse_trace(std::string_view text, std::string origin) {
  PacketSequence seq;
  seq.origin = std::move(origin);
  size_t pos = 0;
  size_t line_no = 0;
  double prev = 0.0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line =
        eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    double t;
    int dir;
    if (!parse_line(line, &t, &dir))
      throw ParseError("malformed trace line " + std::to_string(line_no) + ": '" +
                       std::string(line) + "'");
    if (!seq.cells.empty() && t < prev)
      throw ParseError("decreasing timestamp at line " + std::to_string(line_no));
    prev = t;
    seq.cells.push_back(Cell{t, static_cast<int8_t>(dir)});
  }
  if (seq.cells.empty()) throw ParseError("empty trace");
  double t0 = seq.cells.front().time;
  for (auto& c : seq.cells) c.time -= t0;
  return seq;
}

std::string serialize_trace(const PacketSequence& seq) {
  std::string out;
  out.reserve(seq.cells.size() * 16);
  char buf[64];
  for (const auto& c : seq.cells) {
    snprintf(buf, sizeof(buf), "%.9f\t%d\n", c.time, static_cast<int>(c.direction));
    out += buf;
  }
  return out;
}

PacketSequence load_trace_file(const std::string& path, std::string origin) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_trace(ss.str(), origin.empty() ? path : std::move(origin));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_trace_file(const PacketSequence& seq, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace file: " + path);
  out << serialize_trace(seq);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace owf
