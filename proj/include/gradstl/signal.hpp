#pragma once

// Finite signals: strictly increasing, arbitrarily spaced timestamps paired
// with a row of named state variables per sample.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"

namespace gradstl {

class Signal {
 public:
  // `values` is row-major, one row of `names.size()` entries per timestamp.
  Signal(std::vector<double> times, std::vector<std::string> names,
         std::vector<double> values)
      : times_(std::move(times)),
        names_(std::move(names)),
        values_(std::move(values)) {
    validate();
  }

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t width() const noexcept { return names_.size(); }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double time(std::size_t k) const { return times_.at(k); }

  double at(std::size_t k, std::size_t i) const {
    if (k >= size() || i >= width()) {
      throw IndexError("signal entry (" + std::to_string(k) + ", " +
                       std::to_string(i) + ") out of range");
    }
    return values_[k * width() + i];
  }

  std::span<const double> sample(std::size_t k) const {
    if (k >= size()) {
      throw IndexError("sample " + std::to_string(k) + " out of range for " +
                       std::to_string(size()) + " samples");
    }
    return std::span<const double>(values_).subspan(k * width(), width());
  }

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    return std::nullopt;
  }

  // Same timestamps and names, new (validated) values.
  Signal with_values(std::vector<double> values) const {
    return Signal(times_, names_, std::move(values));
  }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  void validate() const {
    if (times_.empty()) throw ValidationError("signal has no samples");
    if (names_.empty()) throw ValidationError("signal has no state variables");
    if (values_.size() != times_.size() * names_.size()) {
      throw ValidationError("signal matrix is " +
                            std::to_string(values_.size()) +
                            " entries, expected " +
                            std::to_string(times_.size()) + " x " +
                            std::to_string(names_.size()));
    }
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!std::isfinite(times_[k])) {
        throw ValidationError("time " + std::to_string(k) + " is not finite");
      }
      if (k > 0 && !(times_[k - 1] < times_[k])) {
        throw ValidationError("times are not strictly increasing at sample " +
                              std::to_string(k));
      }
    }
    for (std::size_t j = 0; j < values_.size(); ++j) {
      if (!std::isfinite(values_[j])) {
        throw ValidationError("entry (" + std::to_string(j / names_.size()) +
                              ", " + std::to_string(j % names_.size()) +
                              ") is not finite");
      }
    }
  }

  std::vector<double> times_;
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// Time gap between sample k and k + 1.
inline double delta_t(const Signal& s, std::size_t k) {
  if (k + 1 >= s.size()) {
    throw IndexError("delta_t(" + std::to_string(k) + ") needs a sample " +
                     "after it; signal has " + std::to_string(s.size()));
  }
  return s.times()[k + 1] - s.times()[k];
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

// Reads the CSV layout `t,<name1>,...,<nameM>` with one row per sample.
inline Signal read_signal(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!detail::trim(line).empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError(source + ": empty file, expected header");
  std::string_view header = line;
  if (header.size() >= 3 && header.substr(0, 3) == "\xEF\xBB\xBF") {
    header.remove_prefix(3);
  }
  const auto head = detail::split_csv_line(header);
  if (head.empty() || head[0] != "t") {
    throw ParseError(source + ": header must start with column 't'");
  }
  if (head.size() < 2) {
    throw ValidationError(source + ": header names no state variables");
  }
  std::vector<std::string> names;
  for (std::size_t i = 1; i < head.size(); ++i) {
    if (head[i].empty()) {
      throw ParseError(source + ": empty column name in header");
    }
    names.emplace_back(head[i]);
  }

  std::vector<double> times;
  std::vector<double> values;
  while (next_line()) {
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != head.size()) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": row has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(head.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto parsed = detail::parse_double(fields[i]);
      if (!parsed) {
        throw ParseError(source + ":" + std::to_string(line_no) +
                         ": malformed number '" + std::string(fields[i]) + "'");
      }
      (i == 0 ? times : values).push_back(*parsed);
    }
  }
  try {
    return Signal(std::move(times), std::move(names), std::move(values));
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

inline Signal load_signal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open signal file " + path.string());
  return read_signal(in, path.string());
}

// Writes `t` plus one column per entry of `names`, 17 significant digits.
// `values` is row-major with times.size() rows.
inline void write_matrix_csv(std::ostream& out, const std::vector<double>& times,
                             const std::vector<std::string>& names,
                             std::span<const double> values) {
  out << 't';
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << detail::format_significant(times[k], 17);
    for (std::size_t i = 0; i < names.size(); ++i) {
      out << ',' << detail::format_significant(values[k * names.size() + i], 17);
    }
    out << '\n';
  }
}

inline void write_signal(std::ostream& out, const Signal& s) {
  write_matrix_csv(out, s.times(), s.names(), s.values());
}

inline void save_signal(const Signal& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write signal file " + path.string());
  write_signal(out, s);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gradstl
