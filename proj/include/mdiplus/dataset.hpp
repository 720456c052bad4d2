#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

#include "mdiplus/rng.hpp"

namespace mdiplus {

enum class Task { kRegression, kBinaryClassification };

std::string to_string(Task task);
Task task_from_string(const std::string& s);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Fully numeric design matrix plus response. Classification responses are
// stored as 0/1 doubles.
struct Dataset {
  Eigen::MatrixXd x;                       // n x p
  Eigen::VectorXd y;                       // n
  std::vector<std::string> feature_names;  // size p
  Task task = Task::kRegression;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

// Checks shape consistency, finiteness of every entry, and (for
// classification) that labels are exactly 0 or 1. Throws DataError.
void validate_dataset(const Dataset& data);

// Loads an RFC-4180 CSV with a header row. `response_column` names the y
// column; every other column becomes a feature, keeping file order.
Dataset load_csv(const std::string& path, const std::string& response_column,
                 Task task);

// Writes a CSV that load_csv reads back to a bit-identical dataset (floats
// use shortest round-trip formatting). The response is the last column.
void save_csv(const Dataset& data, const std::string& response_column,
              const std::string& path);

// Loads a header-row CSV in which every column is numeric. Optionally
// returns the column names.
Eigen::MatrixXd load_matrix_csv(const std::string& path,
                                std::vector<std::string>* names = nullptr);

// One bootstrap draw of n rows with replacement.
struct BootstrapIndex {
  std::vector<int> in_bag_count;  // multiplicity per row; sums to n
  std::vector<int> oob;           // rows with count 0, ascending
};

BootstrapIndex bootstrap_sample(std::size_t n, Rng& rng);

// Rows of the in-bag multiset, ascending with multiplicity.
std::vector<int> in_bag_rows(const BootstrapIndex& b);

struct SplitIndices {
  std::vector<int> train;  // ascending
  std::vector<int> test;   // ascending
};

// Disjoint row partition with max(1, round(n * test_fraction)) test rows,
// clamped so both sides are non-empty. Requires n >= 2.
SplitIndices train_test_split(std::size_t n, double test_fraction, Rng& rng);

Dataset subset_rows(const Dataset& data, const std::vector<int>& rows);

}  // namespace mdiplus
