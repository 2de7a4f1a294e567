#include "rotwind/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "rotwind/errors.hpp"

namespace rotwind {

CsvTable::CsvTable(std::string schema, std::vector<std::string> columns)
    : schema_(std::move(schema)), cols_(std::move(columns)) {
  if (cols_.empty()) throw InvalidArgument("csv: no columns");
}

void CsvTable::meta(const std::string& key, const std::string& value) {
  if (key.find(':') != std::string::npos || key.find('\n') != std::string::npos ||
      value.find('\n') != std::string::npos)
    throw InvalidArgument("csv: metadata must be a single line without ':' in the key");
  meta_.emplace_back(key, value);
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != cols_.size())
    throw InvalidArgument("csv: row has " + std::to_string(row.size()) + " fields, expected " +
                          std::to_string(cols_.size()));
  rows_.push_back(std::move(row));
}

std::string CsvTable::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta_)
    if (k == key) return v;
  return {};
}

namespace {

void append_line(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string CsvTable::str() const {
  std::string out = "# schema: " + std::string(kCsvSchemaPrefix) + schema_ + "\n";
  for (const auto& [k, v] : meta_) out += "# " + k + ": " + v + "\n";
  append_line(out, cols_);
  for (const auto& r : rows_) append_line(out, r);
  return out;
}

CsvTable CsvTable::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("csv: empty input");
  const std::string head = "# schema: " + std::string(kCsvSchemaPrefix);
  if (line.rfind(head, 0) != 0) throw InvalidArgument("csv: missing schema line");
  const std::string schema = line.substr(head.size());
  std::vector<std::pair<std::string, std::string>> meta;
  while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw InvalidArgument("csv: malformed metadata line");
    meta.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
  }
  if (line.empty() || line[0] == '#') throw InvalidArgument("csv: missing column header");
  CsvTable t(schema, split(line));
  t.meta_ = std::move(meta);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.add_row(split(line));
  }
  return t;
}

CsvTable CsvTable::read(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw InvalidArgument("csv: cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string csv_number(long long x) { return std::to_string(x); }

void write_text_atomic(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::filesystem::path tmp = p;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << text;
    f.flush();
    if (!f) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, p, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename into " + p.string() + ": " + ec.message());
  }
}

void write_csv(const std::filesystem::path& p, const CsvTable& t) { write_text_atomic(p, t.str()); }

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  write_text_atomic(p, j.dump(2) + "\n");
}

}  // namespace rotwind
