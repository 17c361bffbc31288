#pragma once

// Plain numeric CSV streams: optional header row, one frame per line, and a
// blank line marking an episode boundary.

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "incsfa/error.hpp"
#include "incsfa/signal.hpp"

namespace incsfa {

struct CsvStream {
  std::vector<std::string> header;
  std::vector<Frame> frames;
  /// Index of the first frame of every episode (always starts with 0 when non-empty).
  std::vector<std::size_t> episode_starts;

  std::size_t dim() const { return frames.empty() ? header.size() : static_cast<std::size_t>(frames.front().size()); }
};

namespace detail {
inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return cells;
    start = comma + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}
}  // namespace detail

/// Row-by-row reader for numeric CSV. The first line is a header when any
/// cell is not a number, lines starting with '#' are comments, and a blank
/// line ends an episode. Every row must have the same width; errors name the line.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, std::size_t expected_dim = 0) : in_(in), width_(expected_dim) {}

  /// Reads the next frame. episode_start is set for the first frame after a
  /// blank line (and for the very first frame). Returns false at end of input.
  bool next(Frame& out, bool& episode_start) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      const std::string_view row = detail::trim(line);
      if (row.empty()) {
        boundary_ = true;
        continue;
      }
      if (row.front() == '#') continue;
      const auto cells = detail::split_commas(row);
      Frame f(static_cast<Eigen::Index>(cells.size()));
      bool numeric = true;
      for (std::size_t i = 0; i < cells.size() && numeric; ++i) numeric = detail::parse_double(cells[i], f[static_cast<Eigen::Index>(i)]);
      if (!numeric) {
        if (!seen_content_) {
          seen_content_ = true;
          for (auto c : cells) header_.emplace_back(detail::trim(c));
          check_width(cells.size());
          continue;
        }
        throw InvalidInput("csv line " + std::to_string(lineno_) + ": non-numeric value");
      }
      seen_content_ = true;
      check_width(cells.size());
      if (!f.allFinite()) throw InvalidInput("csv line " + std::to_string(lineno_) + ": non-finite value");
      episode_start = boundary_;
      boundary_ = false;
      out = std::move(f);
      return true;
    }
    return false;
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t width() const { return width_; }
  std::size_t line() const { return lineno_; }

 private:
  void check_width(std::size_t n) {
    if (width_ == 0) width_ = n;
    if (n != width_)
      throw InvalidInput("csv line " + std::to_string(lineno_) + ": expected " + std::to_string(width_) + " columns, got " +
                         std::to_string(n));
  }

  std::istream& in_;
  std::size_t width_;
  std::size_t lineno_ = 0;
  bool boundary_ = true;
  bool seen_content_ = false;
  std::vector<std::string> header_;
};

/// Reads a whole numeric CSV stream (see CsvReader for the format).
inline CsvStream read_csv(std::istream& in, std::size_t expected_dim = 0) {
  CsvReader reader(in, expected_dim);
  CsvStream out;
  Frame f;
  bool start = false;
  while (reader.next(f, start)) {
    if (start) out.episode_starts.push_back(out.frames.size());
    out.frames.push_back(f);
  }
  out.header = reader.header();
  return out;
}

inline CsvStream read_csv_file(const std::filesystem::path& path, std::size_t expected_dim = 0) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  return read_csv(in, expected_dim);
}

inline void write_csv_row(std::ostream& os, const Frame& row) {
  char buf[32];
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    const auto res = std::to_chars(buf, buf + sizeof buf, row[c]);
    if (c) os << ',';
    os.write(buf, res.ptr - buf);
  }
  os << '\n';
}

/// Writes an optional '#' comment line, a header and one row per frame in
/// shortest round-trip form.
inline void write_csv(std::ostream& os, const std::vector<std::string>& header, const std::vector<Frame>& rows,
                      const std::vector<std::size_t>& episode_starts = {}, std::string_view comment = {}) {
  if (!comment.empty()) os << "# " << comment << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  if (!header.empty()) os << '\n';
  std::size_t next_start = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    while (next_start < episode_starts.size() && episode_starts[next_start] < r) ++next_start;
    if (r > 0 && next_start < episode_starts.size() && episode_starts[next_start] == r) os << '\n';
    write_csv_row(os, rows[r]);
  }
}

/// Header names prefix0, prefix1, ...
inline std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
template <typename WriteFn>
void write_atomic(const std::filesystem::path& path, WriteFn&& write, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  auto discard = [&] {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
  };
  try {
    std::ofstream os(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!os) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    write(os);
    os.flush();
    if (!os) throw std::system_error(EIO, std::generic_category(), "write failed for " + path.string());
  } catch (...) {
    discard();
    throw;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace incsfa
