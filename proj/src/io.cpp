#include "rglm/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rglm {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_short(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double parse_double(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == ".inf" || text == "infinity")
    return std::numeric_limits<double>::infinity();
  if (text == "-inf" || text == "-.inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) fail(ErrorKind::invalid_input, "not a number: '" + text + "'");
  return v;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

}  // namespace

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  data.validate();
  for (Eigen::Index j = 0; j < data.d(); ++j) os << 'x' << (j + 1) << ',';
  os << 'z';
  const bool clean = data.y_clean.has_value();
  const bool flipped = data.flip_mask.has_value();
  if (clean || flipped) os << ",y_clean,flipped";
  os << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d(); ++j) os << format_double(data.X(i, j)) << ',';
    os << format_double(data.z[i]);
    if (clean || flipped) {
      os << ',' << (clean ? format_double((*data.y_clean)[i]) : "nan");
      os << ',' << (flipped && (*data.flip_mask)[static_cast<std::size_t>(i)] ? 1 : 0);
    }
    os << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::invalid_input, source + ": empty file, expected a header row");
  const auto header = split(strip(line), ',');
  // Expect x1..xd then z, optionally y_clean and flipped.
  std::size_t d = 0;
  while (d < header.size() && header[d] == "x" + std::to_string(d + 1)) ++d;
  if (d == 0) fail(ErrorKind::invalid_input, source + ": header must start with x1");
  if (d >= header.size() || header[d] != "z")
    fail(ErrorKind::invalid_input, source + ": header column " + std::to_string(d + 1) + " must be 'z'");
  const bool extras = header.size() == d + 3;
  if (extras && (header[d + 1] != "y_clean" || header[d + 2] != "flipped"))
    fail(ErrorKind::invalid_input, source + ": trailing header columns must be 'y_clean,flipped'");
  if (!extras && header.size() != d + 1)
    fail(ErrorKind::invalid_input, source + ": unexpected header with " + std::to_string(header.size()) + " columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size())
      fail(ErrorKind::invalid_input, source + ": line " + std::to_string(line_no) + " has " +
                                         std::to_string(cells.size()) + " columns, expected " +
                                         std::to_string(header.size()));
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        values[c] = parse_double(strip(cells[c]));
      } catch (const Error&) {
        fail(ErrorKind::invalid_input, source + ": line " + std::to_string(line_no) + ", column " +
                                           std::to_string(c + 1) + " (" + header[c] + "): not a number '" +
                                           cells[c] + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) fail(ErrorKind::invalid_input, source + ": no data rows");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.X.resize(n, static_cast<Eigen::Index>(d));
  data.z.resize(n);
  if (extras) {
    data.y_clean = Vector<double>(n);
    data.flip_mask = std::vector<bool>(rows.size());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < d; ++j) data.X(i, static_cast<Eigen::Index>(j)) = r[j];
    data.z[i] = r[d];
    if (extras) {
      (*data.y_clean)[i] = r[d + 1];
      if (r[d + 2] != 0 && r[d + 2] != 1)
        fail(ErrorKind::invalid_input, source + ": line " + std::to_string(i + 2) + ": flipped must be 0 or 1");
      (*data.flip_mask)[static_cast<std::size_t>(i)] = r[d + 2] == 1;
    }
  }
  if (extras && !data.y_clean->array().isFinite().all()) data.y_clean.reset();
  try {
    data.validate();
  } catch (const Error& e) {
    fail(ErrorKind::invalid_input, source + ": " + e.what());
  }
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  write_dataset_csv(os, data);
  if (!os) fail(ErrorKind::io, "write to '" + path + "' failed");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::io, "cannot open '" + path + "'");
  return read_dataset_csv(is, path);
}

const std::string* KeyValueRecord::get(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

void write_record(std::ostream& os, const KeyValueRecord& record) {
  for (const auto& [k, v] : record.entries) os << k << " = " << v << '\n';
  os << "beta_hat = ";
  for (Eigen::Index j = 0; j < record.beta.size(); ++j) os << (j ? "," : "") << format_double(record.beta[j]);
  os << '\n';
}

KeyValueRecord read_record(std::istream& is) {
  KeyValueRecord record;
  std::string line;
  while (std::getline(is, line)) {
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::invalid_input, "record line without '=': " + line);
    const std::string key = strip(line.substr(0, eq)), value = strip(line.substr(eq + 1));
    if (key == "beta_hat") {
      const auto cells = value.empty() ? std::vector<std::string>{} : split(value, ',');
      record.beta.resize(static_cast<Eigen::Index>(cells.size()));
      for (std::size_t j = 0; j < cells.size(); ++j) record.beta[static_cast<Eigen::Index>(j)] = parse_double(cells[j]);
    } else {
      record.add(key, value);
    }
  }
  return record;
}

void save_record(const std::string& path, const KeyValueRecord& record) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  write_record(os, record);
  if (!os) fail(ErrorKind::io, "write to '" + path + "' failed");
}

KeyValueRecord load_record(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::io, "cannot open '" + path + "'");
  return read_record(is);
}

void write_error_table_csv(std::ostream& os, const ErrorTable& table) {
  os << "method,feature_dist,n,mean_l2_error,stderr,trials,failures\n";
  for (const auto& r : table.rows)
    os << r.method << ',' << r.feature_dist << ',' << r.n << ',' << format_double(r.mean_l2_error) << ','
       << format_double(r.stderr_) << ',' << r.trials << ',' << r.failures << '\n';
}

}  // namespace rglm
