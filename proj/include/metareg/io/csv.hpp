#pragma once

// Study CSV ingestion: comma-separated, '.' decimal point, header row
// required, optional double-quoted fields.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "metareg/effect_sizes.hpp"
#include "metareg/errors.hpp"
#include "metareg/io/format.hpp"
#include "metareg/model_spec.hpp"

namespace metareg::io {

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // file line of each row

  std::optional<std::size_t> find_column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    return std::nullopt;
  }

  /// First column present among the given names.
  std::optional<std::size_t> find_any(std::initializer_list<std::string_view> names) const {
    for (auto n : names) {
      if (auto j = find_column(n)) return j;
    }
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name) const {
    if (auto j = find_column(name)) return *j;
    throw ValidationError(ValidationError::Kind::invalid_value,
                          source + ": missing column '" + std::string(name) + "'");
  }

  [[noreturn]] void fail_at(std::size_t row, std::size_t col, const std::string& what) const {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          source + ":" + std::to_string(line_numbers[row]) + ": column '" +
                              header[col] + "': " + what);
  }

  double number(std::size_t row, std::size_t col) const {
    const std::string& text = rows[row][col];
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    if (first < last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (first == last || res.ec != std::errc{} || res.ptr != last) {
      fail_at(row, col, "cannot parse '" + text + "' as a number");
    }
    if (!std::isfinite(v)) fail_at(row, col, "value is not finite");
    return v;
  }

  VectorXd numeric_column(std::string_view name) const {
    const std::size_t j = require_column(name);
    VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(i, j);
    return out;
  }

  std::vector<std::string> text_column(std::string_view name) const {
    const std::size_t j = require_column(name);
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) {
    throw ValidationError(ValidationError::Kind::invalid_value, where + ": unterminated quote");
  }
  out.push_back(std::move(field));
  return out;
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    auto fields = detail::split_csv_line(line, where);
    if (!have_header) {
      for (auto& f : fields) {
        f.erase(0, f.find_first_not_of(' '));
        f.erase(f.find_last_not_of(' ') + 1);
      }
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ValidationError(ValidationError::Kind::dimension_mismatch,
                            where + ": expected " + std::to_string(t.header.size()) +
                                " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) {
    throw ValidationError(ValidationError::Kind::empty_input, source + ": file is empty");
  }
  if (t.rows.empty()) {
    throw ValidationError(ValidationError::Kind::empty_input, source + ": no data rows");
  }
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_csv(in, path);
}

enum class Measure { log_odds_ratio, logit_proportion, log_ratio_of_means, precomputed };

inline Measure parse_measure(std::string_view text) {
  if (text == "or" || text == "OR") return Measure::log_odds_ratio;
  if (text == "plo" || text == "PLO") return Measure::logit_proportion;
  if (text == "rom" || text == "ROM") return Measure::log_ratio_of_means;
  if (text == "precomputed") return Measure::precomputed;
  throw std::invalid_argument("unknown measure '" + std::string(text) +
                              "' (expected or, plo, rom or precomputed)");
}

/// A dataset together with the raw table it came from, so that further
/// columns can be used to build the regressor matrix.
struct StudyTable {
  StudyDataset dataset;
  CsvTable raw;
};

namespace detail {

inline std::size_t require_any(const CsvTable& t, std::initializer_list<std::string_view> names) {
  if (auto j = t.find_any(names)) return *j;
  std::string list;
  for (auto n : names) list += (list.empty() ? "" : " or ") + std::string(n);
  throw ValidationError(ValidationError::Kind::invalid_value,
                        t.source + ": missing column " + list);
}

// yi plus one of vi / sigma / sei.
inline EffectEstimate precomputed_row(const CsvTable& t, std::size_t i, std::size_t yi) {
  if (auto vi = t.find_column("vi")) {
    const double v = t.number(i, *vi);
    if (!(v > 0.0)) t.fail_at(i, *vi, "variance must be positive");
    return {t.number(i, yi), v, {}};
  }
  const std::size_t se = require_any(t, {"sigma", "sei"});
  const double s = t.number(i, se);
  if (!(s > 0.0)) t.fail_at(i, se, "standard error must be positive");
  return {t.number(i, yi), s * s, {}};
}

}  // namespace detail

/// Reads a study table and derives effect estimates.  Column names:
///   or          events_trt,total_trt,events_ctl,total_ctl (or ai,n1i,ci,n2i)
///   plo         events,n (or xi,ni); alternatively percent,n (or prog.percent,patients)
///   rom         m1i,sd1i,n1i,m2i,sd2i,n2i, or precomputed yi,vi
///   precomputed yi plus vi, sigma or sei
/// Labels come from a `study` column when present.
inline StudyTable study_table_from_csv(CsvTable t, Measure measure) {
  std::vector<EffectEstimate> est;
  est.reserve(t.rows.size());
  auto at_row = [&](std::size_t i, auto&& compute) {
    try {
      return compute();
    } catch (const ValidationError& e) {
      if (std::string_view(e.what()).rfind(t.source, 0) == 0) throw;
      throw ValidationError(e.kind(), t.source + ":" + std::to_string(t.line_numbers[i]) + ": " +
                                          e.what());
    }
  };
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EffectEstimate e;
    switch (measure) {
      case Measure::log_odds_ratio: {
        const auto a = detail::require_any(t, {"events_trt", "ai"});
        const auto n1 = detail::require_any(t, {"total_trt", "n1i"});
        const auto c = detail::require_any(t, {"events_ctl", "ci"});
        const auto n2 = detail::require_any(t, {"total_ctl", "n2i"});
        e = at_row(i, [&] {
          return log_odds_ratio({t.number(i, a), t.number(i, n1), t.number(i, c), t.number(i, n2)});
        });
        break;
      }
      case Measure::logit_proportion: {
        const auto n = detail::require_any(t, {"n", "ni", "patients"});
        const auto ev = t.find_any({"events", "xi"});
        const auto pct = ev ? std::nullopt : std::optional(detail::require_any(t, {"percent", "prog.percent"}));
        e = at_row(i, [&] {
          const double ni = t.number(i, n);
          const double xi = ev ? t.number(i, *ev) : ni * t.number(i, *pct) / 100.0;
          return logit_proportion(xi, ni);
        });
        break;
      }
      case Measure::log_ratio_of_means: {
        if (auto yi = t.find_column("yi")) {
          e = at_row(i, [&] { return detail::precomputed_row(t, i, *yi); });
          break;
        }
        std::size_t c[6];
        const char* names[6] = {"m1i", "sd1i", "n1i", "m2i", "sd2i", "n2i"};
        for (int j = 0; j < 6; ++j) c[j] = t.require_column(names[j]);
        e = at_row(i, [&] {
          return log_ratio_of_means(t.number(i, c[0]), t.number(i, c[1]), t.number(i, c[2]),
                                    t.number(i, c[3]), t.number(i, c[4]), t.number(i, c[5]));
        });
        break;
      }
      case Measure::precomputed: {
        const auto yi = t.require_column("yi");
        e = at_row(i, [&] { return detail::precomputed_row(t, i, yi); });
        break;
      }
    }
    est.push_back(std::move(e));
  }
  if (auto s = t.find_column("study")) {
    for (std::size_t i = 0; i < est.size(); ++i) est[i].label = t.rows[i][*s];
  }
  StudyTable out{StudyDataset::from_estimates(est), std::move(t)};
  return out;
}

inline StudyTable read_study_csv(const std::string& path, Measure measure) {
  return study_table_from_csv(read_csv(path), measure);
}

/// The input table with yi and vi columns appended (replaced if present).
inline void write_escalc_csv(std::ostream& out, const StudyTable& t) {
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < t.raw.header.size(); ++j) {
    if (t.raw.header[j] != "yi" && t.raw.header[j] != "vi") keep.push_back(j);
  }
  const bool has_study = t.raw.find_column("study").has_value();
  if (!has_study) out << "study,";
  for (std::size_t j : keep) out << detail::quote_csv(t.raw.header[j]) << ',';
  out << "yi,vi\n";
  for (std::size_t i = 0; i < t.raw.rows.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (!has_study) out << detail::quote_csv(t.dataset.labels[i]) << ',';
    for (std::size_t j : keep) out << detail::quote_csv(t.raw.rows[i][j]) << ',';
    const double s = t.dataset.sigma(ii);
    out << format_double(t.dataset.y(ii)) << ',' << format_double(s * s) << '\n';
  }
}

}  // namespace metareg::io
