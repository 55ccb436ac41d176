#include "mrs/csv.hpp"

#include <sstream>

#include "mrs/errors.hpp"
#include "mrs/keyvalue.hpp"
#include "mrs/model.hpp"

namespace mrs {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
  int c = column(name);
  if (c < 0) throw ValidationError("missing column '" + std::string(name) + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    try {
      out.push_back(parse_double(rows[r][c]));
    } catch (const ValidationError&) {
      std::ostringstream os;
      os << "row " << r + 1 << ", column '" << name << "': not a number: '" << rows[r][c] << "'";
      throw ValidationError(os.str());
    }
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  bool have_header = false;
  std::size_t lineno = 0;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_fields(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      std::ostringstream os;
      os << "line " << lineno << ": expected " << t.header.size() << " fields, found " << fields.size();
      throw ValidationError(os.str());
    }
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw ValidationError("CSV has no header row");
  return t;
}

CsvTable read_csv(const std::string& path) {
  try {
    return parse_csv(read_text_file(path));
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    if (msg.find(path) == std::string::npos) msg = path + ": " + msg;
    throw ValidationError(msg);
  }
}

std::vector<double> read_series(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.column("x") >= 0) return t.numeric_column("x");
  if (t.header.size() == 1) return t.numeric_column(t.header[0]);
  throw ValidationError(path + ": no column named 'x'");
}

}  // namespace mrs
