#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "qxfs/bitmask.hpp"
#include "qxfs/error.hpp"
#include "qxfs/random.hpp"

namespace qxfs {

// Dense numeric instance x feature table with integer class labels.
// Values are stored column-major so per-feature scans are contiguous.
class Dataset {
 public:
  Dataset(std::size_t rows, std::vector<double> column_major, std::vector<int> labels,
          std::vector<std::string> feature_names, int n_classes)
      : rows_(rows),
        values_(std::move(column_major)),
        labels_(std::move(labels)),
        names_(std::move(feature_names)),
        n_classes_(n_classes) {
    if (rows_ == 0) throw DataError("dataset has no rows");
    if (names_.empty()) throw DataError("dataset has no features");
    if (values_.size() != rows_ * names_.size()) throw DataError("value matrix size mismatch");
    if (labels_.size() != rows_) throw DataError("label count differs from row count");
    if (n_classes_ < 1) throw DataError("n_classes must be positive");
    for (int y : labels_) {
      if (y < 0 || y >= n_classes_) throw DataError("label out of range");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw DataError("non-finite value in dataset");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t features() const noexcept { return names_.size(); }
  int n_classes() const noexcept { return n_classes_; }

  double value(std::size_t row, std::size_t feature) const {
    return values_[feature * rows_ + row];
  }
  std::span<const double> column(std::size_t feature) const {
    return {values_.data() + feature * rows_, rows_};
  }
  std::span<const int> labels() const noexcept { return labels_; }
  int label(std::size_t row) const { return labels_[row]; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t rows_;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::vector<std::string> names_;
  int n_classes_;
};

struct SplitSet {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Loaded but not yet encoded table. Cells are nullopt when missing.
struct RawDataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<std::optional<std::string>>> columns;  // [feature][row]
  std::vector<std::string> labels;
  std::string label_name;

  std::size_t rows() const noexcept { return labels.size(); }
};

using LabelColumn = std::variant<std::string, std::size_t>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one delimited line, honouring double-quoted fields with "" escapes.
inline std::vector<std::string> split_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

inline bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "NaN" || cell == "nan" ||
         cell == "null";
}

inline std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline RawDataset load_dataset(const std::string& path, const LabelColumn& label_column,
                               char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!detail::trim(line).empty()) {
      header = detail::split_line(line, delimiter);
      break;
    }
  }
  if (header.empty()) throw DataError("data file has no header: " + path);

  std::size_t label_index = header.size();
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw DataError("label column not found: " + *name);
    label_index = static_cast<std::size_t>(it - header.begin());
  } else {
    label_index = std::get<std::size_t>(label_column);
    if (label_index >= header.size()) throw DataError("label column index out of range");
  }
  if (header.size() < 2) throw DataError("data file needs at least one feature column");

  RawDataset raw;
  raw.label_name = header[label_index];
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index) raw.feature_names.push_back(header[c]);
  }
  raw.columns.resize(raw.feature_names.size());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_line(line, delimiter);
    if (fields.size() != header.size()) {
      throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    if (detail::is_missing(fields[label_index])) {
      throw DataError("missing label at line " + std::to_string(line_no));
    }
    raw.labels.push_back(fields[label_index]);
    std::size_t f = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_index) continue;
      if (detail::is_missing(fields[c])) {
        raw.columns[f].push_back(std::nullopt);
      } else {
        raw.columns[f].push_back(std::move(fields[c]));
      }
      ++f;
    }
  }
  if (raw.labels.empty()) throw DataError("data file has zero rows: " + path);
  return raw;
}

// Encodes one column to numbers. A column whose present cells all parse as
// finite reals stays numeric, missing cells take the column mean. Any other
// column is categorical: lexicographic integer codes, missing cells take the
// mode (ties go to the lexicographically smallest value).
inline std::vector<double> encode_column(const std::vector<std::optional<std::string>>& cells) {
  std::vector<double> out(cells.size());
  bool numeric = true;
  bool any_present = false;
  for (const auto& cell : cells) {
    if (!cell) continue;
    any_present = true;
    if (!detail::parse_number(*cell)) {
      numeric = false;
      break;
    }
  }
  if (!any_present) throw DataError("column is entirely missing");

  if (numeric) {
    double sum = 0.0;
    std::size_t present = 0;
    for (const auto& cell : cells) {
      if (cell) {
        sum += *detail::parse_number(*cell);
        ++present;
      }
    }
    const double mean = sum / static_cast<double>(present);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out[i] = cells[i] ? *detail::parse_number(*cells[i]) : mean;
    }
    return out;
  }

  std::map<std::string, std::size_t> frequency;
  for (const auto& cell : cells) {
    if (cell) ++frequency[*cell];
  }
  std::map<std::string, double> code;
  std::string mode;
  std::size_t best = 0;
  double next = 0.0;
  for (const auto& [value, count] : frequency) {
    code[value] = next;
    next += 1.0;
    if (count > best) {
      best = count;
      mode = value;
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out[i] = code.at(cells[i] ? *cells[i] : mode);
  }
  return out;
}

// Label strings to class ids: numerically ordered when every label is a
// number, lexicographically ordered otherwise.
inline std::vector<int> encode_labels(const std::vector<std::string>& labels, int& n_classes) {
  bool numeric = std::all_of(labels.begin(), labels.end(),
                             [](const std::string& s) { return detail::parse_number(s).has_value(); });
  std::vector<std::string> distinct(labels);
  if (numeric) {
    std::sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
      const double x = *detail::parse_number(a);
      const double y = *detail::parse_number(b);
      return x < y || (x == y && a < b);
    });
  } else {
    std::sort(distinct.begin(), distinct.end());
  }
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<std::string, int> code;
  for (std::size_t i = 0; i < distinct.size(); ++i) code[distinct[i]] = static_cast<int>(i);
  n_classes = static_cast<int>(distinct.size());
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& s : labels) out.push_back(code.at(s));
  return out;
}

// Encode, impute, then shuffle rows with a seeded permutation.
inline Dataset preprocess(const RawDataset& raw, std::uint64_t seed) {
  const std::size_t n = raw.rows();
  const std::size_t k = raw.feature_names.size();
  if (n == 0) throw DataError("dataset has zero rows");
  if (k == 0) throw DataError("dataset has no features");

  std::vector<std::vector<double>> encoded;
  encoded.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (raw.columns[j].size() != n) throw DataError("ragged raw column");
    try {
      encoded.push_back(encode_column(raw.columns[j]));
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + ": " + raw.feature_names[j]);
    }
  }
  int n_classes = 0;
  const auto labels = encode_labels(raw.labels, n_classes);

  Rng rng(seed);
  const auto perm = permutation(n, rng);
  std::vector<double> values(n * k);
  std::vector<int> shuffled_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled_labels[i] = labels[perm[i]];
    for (std::size_t j = 0; j < k; ++j) values[j * n + i] = encoded[j][perm[i]];
  }
  return Dataset(n, std::move(values), std::move(shuffled_labels), raw.feature_names, n_classes);
}

// Renders a numeric dataset back into raw form. Values use shortest
// round-trip formatting, so preprocessing the result is lossless.
inline RawDataset to_raw(const Dataset& d, std::string label_name = "label") {
  RawDataset raw;
  raw.feature_names = d.feature_names();
  raw.label_name = std::move(label_name);
  raw.columns.resize(d.features());
  for (std::size_t j = 0; j < d.features(); ++j) {
    raw.columns[j].reserve(d.rows());
    for (double v : d.column(j)) raw.columns[j].emplace_back(detail::format_number(v));
  }
  for (int y : d.labels()) raw.labels.push_back(std::to_string(y));
  return raw;
}

// Row/column sub-table in the given index order.
inline Dataset take(const Dataset& d, std::span<const std::size_t> rows,
                    std::span<const std::size_t> features) {
  if (rows.empty()) throw std::invalid_argument("take: no rows selected");
  if (features.empty()) throw std::invalid_argument("take: no features selected");
  const std::size_t n = rows.size();
  std::vector<double> values(n * features.size());
  std::vector<std::string> names;
  names.reserve(features.size());
  for (std::size_t c = 0; c < features.size(); ++c) {
    const auto col = d.column(features[c]);
    for (std::size_t i = 0; i < n; ++i) values[c * n + i] = col[rows[i]];
    names.push_back(d.feature_names()[features[c]]);
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = d.label(rows[i]);
  return Dataset(n, std::move(values), std::move(labels), std::move(names), d.n_classes());
}

inline Dataset take_rows(const Dataset& d, std::span<const std::size_t> rows) {
  std::vector<std::size_t> cols(d.features());
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  return take(d, rows, cols);
}

struct all_t {
  explicit constexpr all_t() = default;
};
inline constexpr all_t all{};

namespace detail {

inline std::vector<std::size_t> selected(const BitMask& mask, std::size_t expected, const char* what) {
  if (mask.size() != expected) {
    throw std::invalid_argument(std::string("view: ") + what + " mask length mismatch");
  }
  auto idx = mask.indices();
  if (idx.empty()) throw std::invalid_argument(std::string("view: empty ") + what + " mask");
  return idx;
}

inline std::vector<std::size_t> everything(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace detail

inline Dataset view(const Dataset& d, const BitMask& features, const BitMask& instances) {
  return take(d, detail::selected(instances, d.rows(), "instance"),
              detail::selected(features, d.features(), "feature"));
}
inline Dataset view(const Dataset& d, const BitMask& features, all_t) {
  return take(d, detail::everything(d.rows()), detail::selected(features, d.features(), "feature"));
}
inline Dataset view(const Dataset& d, all_t, const BitMask& instances) {
  return take(d, detail::selected(instances, d.rows(), "instance"), detail::everything(d.features()));
}
inline Dataset view(const Dataset& d, all_t, all_t) { return d; }

// Seeded shuffle followed by train = floor(0.6n), validation = floor(0.2n),
// test = the remainder.
inline SplitSet split(const Dataset& d, std::uint64_t seed) {
  const std::size_t n = d.rows();
  if (n < 5) throw DataError("split needs at least 5 rows");
  Rng rng(seed);
  const auto perm = permutation(n, rng);
  const std::size_t n_train = n * 3 / 5;
  const std::size_t n_val = n / 5;
  std::span<const std::size_t> all_rows(perm);
  return SplitSet{take_rows(d, all_rows.subspan(0, n_train)),
                  take_rows(d, all_rows.subspan(n_train, n_val)),
                  take_rows(d, all_rows.subspan(n_train + n_val))};
}

}  // namespace qxfs
