#include "mdiplus/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mdiplus/errors.hpp"

namespace mdiplus {
namespace {

// Parses RFC-4180 content into records. Handles quoted fields containing
// commas, escaped quotes ("") and embedded newlines; accepts CRLF or LF.
std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                const std::string& path) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t i = 0;
  const std::size_t size = text.size();

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  while (i < size) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < size && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !field_was_quoted) {
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (i + 1 >= size || text[i + 1] != '\n') {
        end_record();  // bare CR terminates a record; CRLF defers to the LF
      }
    } else if (c == '\n') {
      end_record();
    } else {
      field.push_back(c);
    }
    ++i;
  }
  if (in_quotes) {
    throw DataError(path + ": unterminated quoted field at end of file");
  }
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();
  return records;
}

double parse_number(const std::string& raw, std::size_t row1, std::size_t col1,
                    const std::string& path) {
  std::size_t begin = raw.find_first_not_of(" \t");
  std::size_t end = raw.find_last_not_of(" \t");
  if (begin == std::string::npos) {
    throw DataError(path + ": empty cell at row " + std::to_string(row1) +
                    ", column " + std::to_string(col1));
  }
  const char* first = raw.data() + begin;
  const char* last = raw.data() + end + 1;
  if (*first == '+') ++first;  // std::from_chars rejects a leading '+'
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError(path + ": cannot parse numeric value \"" + raw +
                    "\" at row " + std::to_string(row1) + ", column " +
                    std::to_string(col1));
  }
  return value;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string to_string(Task task) {
  return task == Task::kRegression ? "regression" : "classification";
}

Task task_from_string(const std::string& s) {
  if (s == "regression") return Task::kRegression;
  if (s == "classification" || s == "binary-classification") {
    return Task::kBinaryClassification;
  }
  throw ConfigError("unknown task \"" + s +
                    "\" (expected regression or classification)");
}

void validate_dataset(const Dataset& data) {
  if (data.x.rows() == 0 || data.x.cols() == 0) {
    throw DataError("dataset must have at least one row and one feature");
  }
  if (data.y.size() != data.x.rows()) {
    throw DataError("response length does not match number of rows");
  }
  if (static_cast<Eigen::Index>(data.feature_names.size()) != data.x.cols()) {
    throw DataError("feature name count does not match number of columns");
  }
  if (!data.x.allFinite()) {
    throw DataError("feature matrix contains NaN or infinite entries");
  }
  if (!data.y.allFinite()) {
    throw DataError("response contains NaN or infinite entries");
  }
  if (data.task == Task::kBinaryClassification) {
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
      if (data.y[i] != 0.0 && data.y[i] != 1.0) {
        throw DataError("classification response must be 0/1; row " +
                        std::to_string(i + 1) + " has value " +
                        format_double(data.y[i]));
      }
    }
  }
}

Dataset load_csv(const std::string& path, const std::string& response_column,
                 Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const auto records = parse_csv(buffer.str(), path);
  if (records.size() < 2) {
    throw DataError(path + ": need a header row and at least one data row");
  }

  const auto& header = records[0];
  const std::size_t n_cols = header.size();
  std::ptrdiff_t response_idx = -1;
  for (std::size_t j = 0; j < n_cols; ++j) {
    if (header[j] == response_column) {
      response_idx = static_cast<std::ptrdiff_t>(j);
      break;
    }
  }
  if (response_idx < 0) {
    std::string available;
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (j) available += ", ";
      available += header[j];
    }
    throw DataError(path + ": response column \"" + response_column +
                    "\" not found; available columns: " + available);
  }
  if (n_cols < 2) {
    throw DataError(path + ": need at least one feature column");
  }

  const std::size_t n = records.size() - 1;
  const std::size_t p = n_cols - 1;
  Dataset data;
  data.task = task;
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  data.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n_cols; ++j) {
    if (static_cast<std::ptrdiff_t>(j) != response_idx) {
      data.feature_names.push_back(header[j]);
    }
  }

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = records[r + 1];
    if (row.size() != n_cols) {
      throw DataError(path + ": row " + std::to_string(r + 2) + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(n_cols));
    }
    std::size_t out_col = 0;
    for (std::size_t j = 0; j < n_cols; ++j) {
      const double value = parse_number(row[j], r + 2, j + 1, path);
      if (static_cast<std::ptrdiff_t>(j) == response_idx) {
        data.y[static_cast<Eigen::Index>(r)] = value;
      } else {
        data.x(static_cast<Eigen::Index>(r),
               static_cast<Eigen::Index>(out_col++)) = value;
      }
    }
  }
  validate_dataset(data);
  return data;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path,
                                std::vector<std::string>* names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const auto records = parse_csv(buffer.str(), path);
  if (records.size() < 2) {
    throw DataError(path + ": need a header row and at least one data row");
  }

  const auto& header = records[0];
  const std::size_t n_cols = header.size();
  const std::size_t n = records.size() - 1;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(n_cols));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = records[r + 1];
    if (row.size() != n_cols) {
      throw DataError(path + ": row " + std::to_string(r + 2) + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(n_cols));
    }
    for (std::size_t j = 0; j < n_cols; ++j) {
      const double value = parse_number(row[j], r + 2, j + 1, path);
      if (!std::isfinite(value)) {
        throw DataError(path + ": non-finite value at row " +
                        std::to_string(r + 2) + ", column " +
                        std::to_string(j + 1));
      }
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = value;
    }
  }
  if (names) *names = header;
  return x;
}

void save_csv(const Dataset& data, const std::string& response_column,
              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    out << csv_escape(data.feature_names[static_cast<std::size_t>(j)]) << ',';
  }
  out << csv_escape(response_column) << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      out << format_double(data.x(i, j)) << ',';
    }
    out << format_double(data.y[i]) << '\n';
  }
  if (!out) throw DataError("failed while writing: " + path);
}

BootstrapIndex bootstrap_sample(std::size_t n, Rng& rng) {
  BootstrapIndex b;
  b.in_bag_count.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++b.in_bag_count[rng.uniform_below(n)];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (b.in_bag_count[i] == 0) b.oob.push_back(static_cast<int>(i));
  }
  return b;
}

std::vector<int> in_bag_rows(const BootstrapIndex& b) {
  std::vector<int> rows;
  rows.reserve(b.in_bag_count.size());
  for (std::size_t i = 0; i < b.in_bag_count.size(); ++i) {
    for (int c = 0; c < b.in_bag_count[i]; ++c) {
      rows.push_back(static_cast<int>(i));
    }
  }
  return rows;
}

SplitIndices train_test_split(std::size_t n, double test_fraction, Rng& rng) {
  if (n < 2) throw ConfigError("train/test split needs at least 2 rows");
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ConfigError("test_fraction must lie in [0, 1]");
  }
  std::size_t n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::max<std::size_t>(1, std::min(n_test, n - 1));
  auto test = rng.sample_without_replacement(n, n_test);
  SplitIndices split;
  split.test.assign(test.begin(), test.end());
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t < test.size() && test[t] == i) {
      ++t;
    } else {
      split.train.push_back(static_cast<int>(i));
    }
  }
  return split;
}

Dataset subset_rows(const Dataset& data, const std::vector<int>& rows) {
  Dataset out;
  out.task = data.task;
  out.feature_names = data.feature_names;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), data.p());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(rows[i]);
    out.y[static_cast<Eigen::Index>(i)] = data.y[rows[i]];
  }
  return out;
}

}  // namespace mdiplus
