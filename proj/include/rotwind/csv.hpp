#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace rotwind {

/// Every CSV starts with "# schema: rotwind.<name>/<version>", then "# key: value"
/// metadata lines, then the column header.
inline constexpr const char* kCsvSchemaPrefix = "rotwind.";

class CsvTable {
 public:
  CsvTable(std::string schema, std::vector<std::string> columns);

  void meta(const std::string& key, const std::string& value);
  void add_row(std::vector<std::string> row);

  const std::string& schema() const { return schema_; }
  const std::vector<std::string>& columns() const { return cols_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& metadata() const { return meta_; }
  std::string meta_value(const std::string& key) const;  // empty when absent

  std::string str() const;
  /// Parses the format written by str(); throws InvalidArgument on malformed input.
  static CsvTable parse(const std::string& text);
  static CsvTable read(const std::filesystem::path& p);

 private:
  std::string schema_;
  std::vector<std::string> cols_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<std::string>> rows_;
};

/// Shortest round-trip representation; identical inputs give identical text.
std::string csv_number(double x);
std::string csv_number(long long x);
inline std::string csv_number(int x) { return csv_number(static_cast<long long>(x)); }
inline std::string csv_number(std::size_t x) { return csv_number(static_cast<long long>(x)); }

/// Writes to a sibling temporary file and renames it over `p`.
void write_text_atomic(const std::filesystem::path& p, const std::string& text);
void write_csv(const std::filesystem::path& p, const CsvTable& t);
void write_json(const std::filesystem::path& p, const nlohmann::json& j);

}  // namespace rotwind
