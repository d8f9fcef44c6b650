#include "massfuse/csv.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "massfuse/errors.h"

namespace massfuse {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw SchemaError("missing column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.push_back(parse_double(rows[r][c], r + 1, std::string(name)));
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty()) continue;
    if (line_no == 0) {
      for (auto& f : split_fields(line)) table.header.emplace_back(trim(f));
    } else {
      auto fields = split_fields(line);
      if (fields.size() != table.header.size()) {
        throw ParseError(line_no, "", "expected " +
                                          std::to_string(table.header.size()) +
                                          " fields, found " +
                                          std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
    }
    ++line_no;
  }
  if (table.header.empty()) throw SchemaError("missing header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path));
}

double parse_double(std::string_view cell, std::size_t row,
                    const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  // from_chars rejects a leading '+', which some writers emit.
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(row, column, "'" + std::string(cell) + "' is not a number");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Frame parse_frame_csv(std::string_view text, const FrameSchema& schema) {
  const CsvTable table = parse_csv(text);
  const std::size_t id_col = table.column("id");
  std::vector<std::size_t> x_cols, y_cols;
  for (const auto& n : schema.covariates) x_cols.push_back(table.column(n));
  for (const auto& n : schema.outcomes) y_cols.push_back(table.column(n));
  const std::size_t nil = static_cast<std::size_t>(-1);
  const std::size_t d_col = schema.has_delta_b ? table.column("delta_b") : nil;
  const std::size_t s_col = schema.has_stratum ? table.column("stratum") : nil;
  if (table.rows.empty()) throw EmptyFrameError("CSV has no data rows");

  std::vector<UnitRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = r + 1;
    UnitRecord rec;
    std::int64_t id = 0;
    {
      const auto& cell = row[id_col];
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), id);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          id < 0) {
        throw ParseError(line, "id", "'" + cell + "' is not a non-negative integer");
      }
    }
    rec.id = id;
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      rec.x.push_back(parse_double(row[x_cols[j]], line, schema.covariates[j]));
    }
    for (std::size_t j = 0; j < y_cols.size(); ++j) {
      rec.y.push_back(parse_double(row[y_cols[j]], line, schema.outcomes[j]));
    }
    if (d_col != nil) {
      const auto& cell = row[d_col];
      if (cell != "0" && cell != "1") {
        throw ParseError(line, "delta_b", "'" + cell + "' is not 0 or 1");
      }
      rec.delta_b = cell == "1";
    }
    if (s_col != nil) {
      const auto& cell = row[s_col];
      int s = 0;
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), s);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ParseError(line, "stratum", "'" + cell + "' is not an integer");
      }
      rec.stratum = s;
    }
    records.push_back(std::move(rec));
  }
  return Frame(std::move(records), schema);
}

Frame read_frame_csv(const std::filesystem::path& path,
                     const FrameSchema& schema) {
  return parse_frame_csv(read_file(path), schema);
}

std::string format_frame_csv(const Frame& frame) {
  const FrameSchema& s = frame.schema();
  std::string out = "id";
  for (const auto& n : s.covariates) out += "," + n;
  for (const auto& n : s.outcomes) out += "," + n;
  if (s.has_delta_b) out += ",delta_b";
  if (s.has_stratum) out += ",stratum";
  out += '\n';
  for (const auto& r : frame.records()) {
    out += std::to_string(r.id);
    for (double v : r.x) out += "," + format_double(v);
    for (double v : r.y) out += "," + format_double(v);
    if (s.has_delta_b) out += r.delta_b ? ",1" : ",0";
    if (s.has_stratum) out += "," + std::to_string(r.stratum);
    out += '\n';
  }
  return out;
}

void write_frame_csv(const Frame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out << format_frame_csv(frame);
  if (!out) throw IOError("write failed for '" + path.string() + "'");
}

}  // namespace massfuse
