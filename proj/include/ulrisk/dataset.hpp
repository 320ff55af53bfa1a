#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ulrisk/csv.hpp"
#include "ulrisk/error.hpp"
#include "ulrisk/schema.hpp"
#include "ulrisk/timeutil.hpp"

namespace ulrisk {

enum class Source { GaisbergTower, SaentisTower, GridCell, Synthetic };
enum class UlSubtype { LlsDetectable, LlsNonDetectable };

constexpr std::string_view to_string(Source s) {
  switch (s) {
    case Source::GaisbergTower: return "GaisbergTower";
    case Source::SaentisTower: return "SaentisTower";
    case Source::GridCell: return "GridCell";
    case Source::Synthetic: return "Synthetic";
  }
  return "";
}

constexpr std::string_view to_string(UlSubtype s) {
  return s == UlSubtype::LlsDetectable ? "LLS-detectable" : "LLS-non-detectable";
}

struct Sample {
  std::vector<double> features;
  Minute timestamp{};
  double lat = 0.0;
  double lon = 0.0;
  bool ul = false;
  Source source = Source::Synthetic;
  std::optional<UlSubtype> ul_subtype;

  Date date() const { return date_of(timestamp); }
  bool operator==(const Sample&) const = default;
};

using DateSet = std::set<Date>;

/// Labeled samples over a fixed schema. Immutable once constructed.
class Dataset {
 public:
  Dataset() = default;

  Dataset(FeatureSchema schema, std::vector<Sample> rows) : schema_(std::move(schema)), rows_(std::move(rows)) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      require(r.features.size() == schema_.count(), ErrorKind::LengthMismatch,
              "row " + std::to_string(i) + ": " + std::to_string(r.features.size()) + " features, schema has " +
                  std::to_string(schema_.count()));
      for (std::size_t j = 0; j < r.features.size(); ++j) {
        require(std::isfinite(r.features[j]), ErrorKind::BadValue,
                "row " + std::to_string(i) + ", column " + schema_[j].name + ": non-finite value");
      }
      require(!r.ul_subtype || r.ul, ErrorKind::BadValue,
              "row " + std::to_string(i) + ": ul_subtype given for a no-UL row");
    }
  }

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<Sample>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const Sample& operator[](std::size_t i) const { return rows_[i]; }

  std::size_t positives() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.ul ? 1 : 0;
    return n;
  }

  template <typename Pred>
  Dataset filter(Pred&& keep) const {
    std::vector<Sample> out;
    for (const auto& r : rows_) {
      if (keep(r)) out.push_back(r);
    }
    return Dataset(schema_, std::move(out));
  }

  Dataset subset(const std::vector<std::size_t>& indices) const {
    std::vector<Sample> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(rows_.at(i));
    return Dataset(schema_, std::move(out));
  }

  /// Distinct UTC calendar dates carrying at least one UL row.
  DateSet event_days() const {
    DateSet days;
    for (const auto& r : rows_) {
      if (r.ul) days.insert(r.date());
    }
    return days;
  }

 private:
  FeatureSchema schema_;
  std::vector<Sample> rows_;
};

inline DateSet merge_event_days(const DateSet& a, const DateSet& b) {
  DateSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

inline Dataset concat(const Dataset& a, const Dataset& b) {
  require(a.schema() == b.schema(), ErrorKind::SchemaMismatch, "concat: schemas differ");
  std::vector<Sample> rows = a.rows();
  rows.insert(rows.end(), b.rows().begin(), b.rows().end());
  return Dataset(a.schema(), std::move(rows));
}

namespace detail {

inline const std::vector<std::string>& meta_columns() {
  static const std::vector<std::string> cols{"timestamp", "lat", "lon", "label", "ul_subtype", "source"};
  return cols;
}

inline Source parse_source(std::string_view s, const std::string& ctx) {
  for (auto src : {Source::GaisbergTower, Source::SaentisTower, Source::GridCell, Source::Synthetic}) {
    if (s == to_string(src)) return src;
  }
  fail(ErrorKind::BadValue, ctx + ": unknown source '" + std::string(s) + "'");
}

}  // namespace detail

/// Feature table CSV. Columns: the schema variables in order, then
/// timestamp,lat,lon,label and optionally ul_subtype and source.
/// Labels are 1/0 (UL/no-UL are accepted on input).
inline Dataset parse_feature_table(const csv::Table& table, const FeatureSchema& schema, const std::string& source) {
  const auto names = schema.names();
  const auto& meta = detail::meta_columns();
  const std::size_t p = names.size();
  bool header_ok = table.header.size() >= p + 4 && table.header.size() <= p + 6;
  for (std::size_t j = 0; header_ok && j < table.header.size(); ++j) {
    header_ok = table.header[j] == (j < p ? names[j] : meta[j - p]);
  }
  if (!header_ok) {
    std::string missing;
    for (const auto& n : names) {
      if (std::find(table.header.begin(), table.header.end(), n) == table.header.end()) missing = n;
    }
    fail(ErrorKind::SchemaMismatch,
         source + ": header does not match schema" + (missing.empty() ? "" : " (missing '" + missing + "')"));
  }
  if (table.rows.empty()) fail(ErrorKind::EmptyFile, source + ": no data rows");

  const std::size_t n_meta = table.header.size() - p;
  std::vector<Sample> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const std::string where = source + ": row " + std::to_string(r + 1) + " (line " + std::to_string(table.line_numbers[r]) + ")";
    Sample s;
    s.features.resize(p);
    for (std::size_t j = 0; j < p; ++j) s.features[j] = csv::parse_finite(f[j], where + ", column " + names[j]);
    s.timestamp = parse_timestamp(f[p]);
    s.lat = csv::parse_finite(f[p + 1], where + ", column lat");
    s.lon = csv::parse_finite(f[p + 2], where + ", column lon");
    const auto& label = f[p + 3];
    if (label == "1" || label == "UL") {
      s.ul = true;
    } else if (label == "0" || label == "no-UL") {
      s.ul = false;
    } else {
      fail(ErrorKind::BadValue, where + ", column label: expected 1/0/UL/no-UL, got '" + label + "'");
    }
    s.source = n_meta >= 6 && !f[p + 5].empty() ? detail::parse_source(f[p + 5], where) : Source::Synthetic;
    const std::string subtype = n_meta >= 5 ? f[p + 4] : "";
    if (subtype == to_string(UlSubtype::LlsDetectable)) {
      s.ul_subtype = UlSubtype::LlsDetectable;
    } else if (subtype == to_string(UlSubtype::LlsNonDetectable)) {
      s.ul_subtype = UlSubtype::LlsNonDetectable;
    } else if (!subtype.empty()) {
      fail(ErrorKind::BadValue, where + ", column ul_subtype: unknown value '" + subtype + "'");
    }
    if (s.ul_subtype && !s.ul) fail(ErrorKind::BadValue, where + ": ul_subtype given for a no-UL row");
    // Saentis sensors only see UL that an LLS would also detect.
    if (s.ul && !s.ul_subtype && s.source == Source::SaentisTower) s.ul_subtype = UlSubtype::LlsDetectable;
    rows.push_back(std::move(s));
  }
  return Dataset(schema, std::move(rows));
}

inline Dataset load_feature_table(const std::filesystem::path& path, const FeatureSchema& schema = canonical_schema()) {
  return parse_feature_table(csv::read_file(path), schema, path.string());
}

/// Canonical form: all six meta columns, shortest round-trip numbers.
inline std::string feature_table_to_csv(const Dataset& data) {
  std::vector<std::string> header = data.schema().names();
  header.insert(header.end(), detail::meta_columns().begin(), detail::meta_columns().end());
  std::string out = csv::join(header) + "\n";
  for (const auto& r : data.rows()) {
    for (double v : r.features) {
      out += csv::format_double(v);
      out.push_back(',');
    }
    out += format_timestamp(r.timestamp) + "," + csv::format_double(r.lat) + "," + csv::format_double(r.lon) + "," +
           (r.ul ? "1" : "0") + "," + (r.ul_subtype ? std::string(to_string(*r.ul_subtype)) : "") + "," +
           std::string(to_string(r.source)) + "\n";
  }
  return out;
}

inline void save_feature_table(const std::filesystem::path& path, const Dataset& data) {
  csv::write_file(path, feature_table_to_csv(data));
}

}  // namespace ulrisk
