#include "hypflow/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hypflow {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("rename failed: " + tmp + " -> " + path + " (" +
                             std::strerror(errno) + ")");
  }
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ostringstream out;
  for (const auto& c : table.comments) out << "# " << c << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("write_csv: row width mismatch");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << fmt17(row[i]);
    }
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (true) {
    std::size_t comma = line.find(',', at);
    out.push_back(line.substr(at, comma == std::string::npos ? comma : comma - at));
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

double parse_double_strict(const std::string& s, int line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0')) {
    throw std::runtime_error("CSV line " + std::to_string(line_no) +
                             ": malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  CsvTable table;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t at = line.find_first_not_of("# ");
      table.comments.push_back(at == std::string::npos ? "" : line.substr(at));
      continue;
    }
    if (!have_header) {
      table.header = split_fields(line);
      have_header = true;
      continue;
    }
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) +
                               ": expected " + std::to_string(table.header.size()) +
                               " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double_strict(f, line_no));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw std::runtime_error("CSV has no header: " + path);
  return table;
}

void write_points_csv(const std::string& path, const std::vector<ManifoldPoint>& pts) {
  if (pts.empty()) throw std::invalid_argument("write_points_csv: no points");
  CsvTable table;
  int n = pts[0].dim();
  for (int i = 0; i <= n; ++i) table.header.push_back("x" + std::to_string(i));
  for (const auto& p : pts) {
    if (p.dim() != n) throw std::invalid_argument("write_points_csv: mixed dims");
    table.rows.push_back(p.x);
  }
  write_csv(path, table);
}

std::vector<ManifoldPoint> read_points_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  if (table.header.size() < 3 || table.header[0] != "x0") {
    throw std::runtime_error("not a point CSV (expected columns x0..xn): " + path);
  }
  std::vector<ManifoldPoint> pts;
  pts.reserve(table.rows.size());
  for (auto& row : table.rows) pts.push_back(ManifoldPoint{std::move(row)});
  return pts;
}

}  // namespace hypflow
