#include "mieo/csv.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "mieo/error.hpp"

namespace mieo {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  return out;
}

double parse_double(const std::string& s, std::size_t row, const std::string& col) {
  double v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail_validation("malformed number '" + s + "' at row " + std::to_string(row) + ", column '" +
                    col + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_usage("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  // Tolerate a trailing newline; skip a final fully empty line.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

TabularDataset load_csv(const std::string& path, const FeatureSchema& schema) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) fail_validation("empty CSV: " + path);

  std::vector<std::string> header = split_line(lines[0]);
  const std::size_t f = schema.size();
  bool has_label = header.size() == f + 1 && header.back() == "label";
  if (!has_label && header.size() != f)
    fail_validation("header of " + path + " has " + std::to_string(header.size()) +
                    " columns, schema expects " + std::to_string(f));
  for (std::size_t j = 0; j < f; ++j) {
    if (header[j] != schema.at(j).name)
      fail_validation("header mismatch in " + path + ": column " + std::to_string(j) + " is '" +
                      header[j] + "', schema expects '" + schema.at(j).name + "'");
  }

  const std::size_t n = lines.size() - 1;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
  std::vector<Label> labels(n, Label::unlabelled);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> fields = split_line(lines[i + 1]);
    if (fields.size() != header.size())
      fail_validation("row " + std::to_string(i + 1) + " of " + path + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    for (std::size_t j = 0; j < f; ++j) {
      const std::string& s = fields[j];
      double& cell = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (s.empty()) {
        cell = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double v = parse_double(s, i + 1, schema.at(j).name);
      if (schema.is_binary(j) && v != 0.0 && v != 1.0)
        fail_validation("binary cell '" + s + "' at row " + std::to_string(i + 1) + ", column '" +
                        schema.at(j).name + "' is not 0 or 1");
      cell = v;
    }
    if (has_label) {
      const std::string& s = fields[f];
      if (s.empty()) labels[i] = Label::unlabelled;
      else if (s == "0") labels[i] = Label::negative;
      else if (s == "1") labels[i] = Label::positive;
      else
        fail_validation("label '" + s + "' at row " + std::to_string(i + 1) +
                        " is not 0, 1 or empty");
    }
  }
  return TabularDataset(schema, std::move(values), std::move(labels));
}

void save_csv(const TabularDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_usage("cannot write file: " + path);
  const FeatureSchema& schema = ds.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (j) out << ',';
    out << schema.at(j).name;
  }
  out << ",label\n";
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.cols(); ++j) {
      if (j) out << ',';
      double v = ds.values()(i, j);
      if (!std::isnan(v)) out << format_double(v);
    }
    out << ',';
    Label l = ds.labels()[static_cast<std::size_t>(i)];
    if (l == Label::negative) out << '0';
    else if (l == Label::positive) out << '1';
    out << '\n';
  }
  if (!out) fail_runtime("write failed: " + path);
}

void save_matrix_csv(const std::string& path, const std::vector<std::string>& names,
                     const Eigen::MatrixXd& values, const std::vector<Label>* labels) {
  if (static_cast<Eigen::Index>(names.size()) != values.cols())
    fail_validation("save_matrix_csv: " + std::to_string(names.size()) + " names for " +
                    std::to_string(values.cols()) + " columns");
  if (labels && static_cast<Eigen::Index>(labels->size()) != values.rows())
    fail_validation("save_matrix_csv: label count does not match row count");
  std::ofstream out(path);
  if (!out) fail_usage("cannot write file: " + path);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out << ',';
    out << names[j];
  }
  if (labels) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      double v = values(i, j);
      if (!std::isnan(v)) out << format_double(v);
    }
    if (labels) {
      out << ',';
      Label l = (*labels)[static_cast<std::size_t>(i)];
      if (l == Label::negative) out << '0';
      else if (l == Label::positive) out << '1';
    }
    out << '\n';
  }
  if (!out) fail_runtime("write failed: " + path);
}

std::vector<FollowupRecord> load_followup_csv(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) fail_validation("empty follow-up CSV: " + path);
  std::vector<std::string> header = split_line(lines[0]);
  if (header != std::vector<std::string>{"event_type", "event_time_years", "followup_years"})
    fail_validation("follow-up CSV header must be event_type,event_time_years,followup_years");
  std::vector<FollowupRecord> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_line(lines[i]);
    if (fields.size() != 3)
      fail_validation("follow-up row " + std::to_string(i) + " needs 3 fields");
    FollowupRecord r;
    if (fields[0] == "none") r.event_type = EventType::none;
    else if (fields[0] == "cvd") r.event_type = EventType::cvd;
    else if (fields[0] == "other_death") r.event_type = EventType::other_death;
    else fail_validation("unknown event_type '" + fields[0] + "' at row " + std::to_string(i));
    r.event_time_years = fields[1].empty() ? 0.0 : parse_double(fields[1], i, "event_time_years");
    r.followup_years = parse_double(fields[2], i, "followup_years");
    out.push_back(r);
  }
  return out;
}

FeatureSchema infer_schema_csv(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) fail_validation("empty CSV: " + path);
  std::vector<std::string> header = split_line(lines[0]);
  std::size_t f = header.size();
  if (f > 0 && header.back() == "label") --f;
  if (f == 0) fail_validation("CSV has no feature columns: " + path);
  std::vector<bool> binary(f, true);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_line(lines[i]);
    for (std::size_t j = 0; j < f && j < fields.size(); ++j) {
      const std::string& s = fields[j];
      if (!s.empty() && s != "0" && s != "1") binary[j] = false;
    }
  }
  std::vector<Column> cols(f);
  for (std::size_t j = 0; j < f; ++j)
    cols[j] = Column{header[j], binary[j] ? ColumnKind::binary : ColumnKind::continuous};
  return FeatureSchema(std::move(cols));
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_usage("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize got = in.gcount();
    for (std::streamsize k = 0; k < got; ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ull;
    }
  }
  std::ostringstream os;
  os << std::hex;
  for (int shift = 60; shift >= 0; shift -= 4) os << ((h >> shift) & 0xf);
  return os.str();
}

}  // namespace mieo
