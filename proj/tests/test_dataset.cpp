#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include "doctest.h"
#include "mdiplus/dataset.hpp"
#include "mdiplus/errors.hpp"
#include "mdiplus/rng.hpp"

using namespace mdiplus;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/mdiplus_test_") + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("bootstrap counts sum to n and oob lists zero-count rows") {
  Rng rng(17, 0);
  const std::size_t n = 64;
  auto b = bootstrap_sample(n, rng);
  REQUIRE(b.in_bag_count.size() == n);
  const int total = std::accumulate(b.in_bag_count.begin(),
                                    b.in_bag_count.end(), 0);
  CHECK(total == static_cast<int>(n));
  CHECK(std::is_sorted(b.oob.begin(), b.oob.end()));
  for (int row : b.oob) CHECK(b.in_bag_count[static_cast<std::size_t>(row)] == 0);
  std::size_t zero_rows = 0;
  for (int c : b.in_bag_count) {
    if (c == 0) ++zero_rows;
  }
  CHECK(zero_rows == b.oob.size());
}

TEST_CASE("average oob fraction approaches 1/e") {
  // Expected fraction of rows never drawn is (1-1/n)^n -> exp(-1) = 0.3679.
  const std::size_t n = 500;
  double fraction_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed, 0);
    auto b = bootstrap_sample(n, rng);
    fraction_sum += static_cast<double>(b.oob.size()) / static_cast<double>(n);
  }
  const double mean_fraction = fraction_sum / 100.0;
  CHECK(mean_fraction > 0.3679 - 0.05);
  CHECK(mean_fraction < 0.3679 + 0.05);
}

TEST_CASE("in_bag_rows expands multiplicities in ascending order") {
  BootstrapIndex b;
  b.in_bag_count = {2, 0, 1, 3};
  auto rows = in_bag_rows(b);
  CHECK(rows == std::vector<int>{0, 0, 2, 3, 3, 3});
}

TEST_CASE("train_test_split partitions rows") {
  Rng rng(5, 0);
  auto split = train_test_split(10, 0.3, rng);
  CHECK(split.test.size() == 3);
  CHECK(split.train.size() == 7);
  std::set<int> all;
  all.insert(split.test.begin(), split.test.end());
  all.insert(split.train.begin(), split.train.end());
  CHECK(all.size() == 10);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 9);
  CHECK(std::is_sorted(split.train.begin(), split.train.end()));
  CHECK(std::is_sorted(split.test.begin(), split.test.end()));
}

TEST_CASE("train_test_split clamps to keep both sides non-empty") {
  Rng rng(5, 0);
  auto tiny = train_test_split(8, 0.001, rng);
  CHECK(tiny.test.size() == 1);  // max(1, round(0.008))
  auto huge = train_test_split(8, 0.999, rng);
  CHECK(huge.test.size() == 7);  // round(7.992)=8 clamped to n-1
  CHECK(huge.train.size() == 1);
  CHECK_THROWS_AS(train_test_split(1, 0.5, rng), ConfigError);
  CHECK_THROWS_AS(train_test_split(8, 1.5, rng), ConfigError);
}

TEST_CASE("csv round trip is bit exact") {
  Dataset data;
  data.task = Task::kRegression;
  data.feature_names = {"a", "b,comma", "c\"quote"};
  Rng rng(23, 0);
  data.x.resize(17, 3);
  data.y.resize(17);
  for (Eigen::Index i = 0; i < 17; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) data.x(i, j) = rng.normal() * 1e3;
    data.y[i] = rng.normal() / 7.0;
  }
  const auto path = temp_path("roundtrip.csv");
  save_csv(data, "target", path);
  auto loaded = load_csv(path, "target", Task::kRegression);
  REQUIRE(loaded.n() == data.n());
  REQUIRE(loaded.p() == data.p());
  CHECK(loaded.feature_names == data.feature_names);
  CHECK((loaded.x.array() == data.x.array()).all());
  CHECK((loaded.y.array() == data.y.array()).all());
  std::remove(path.c_str());
}

TEST_CASE("csv parser handles quoted fields, CRLF and escaped quotes") {
  const auto path = temp_path("quoted.csv");
  write_file(path,
             "\"x,1\",\"say \"\"hi\"\"\",y\r\n"
             "1.5,2.25,0\r\n"
             "-3e2,0.125,1\r\n");
  auto data = load_csv(path, "y", Task::kBinaryClassification);
  REQUIRE(data.n() == 2);
  REQUIRE(data.p() == 2);
  CHECK(data.feature_names[0] == "x,1");
  CHECK(data.feature_names[1] == "say \"hi\"");
  CHECK(data.x(0, 0) == 1.5);
  CHECK(data.x(1, 0) == -300.0);
  CHECK(data.x(1, 1) == 0.125);
  CHECK(data.y[1] == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("csv errors carry row and column positions") {
  const auto path = temp_path("bad.csv");
  write_file(path, "a,b\n1,2\n3,oops\n");
  try {
    load_csv(path, "b", Task::kRegression);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("missing response column lists available names") {
  const auto path = temp_path("missing.csv");
  write_file(path, "a,b\n1,2\n");
  try {
    load_csv(path, "target", Task::kRegression);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("target") != std::string::npos);
    CHECK(msg.find("a, b") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("non-binary labels rejected for classification") {
  const auto path = temp_path("labels.csv");
  write_file(path, "a,y\n1,0\n2,2\n");
  CHECK_THROWS_AS(load_csv(path, "y", Task::kBinaryClassification), DataError);
  CHECK_NOTHROW(load_csv(path, "y", Task::kRegression));
  std::remove(path.c_str());
}

TEST_CASE("validate_dataset rejects non-finite entries") {
  Dataset data;
  data.feature_names = {"a"};
  data.x.resize(2, 1);
  data.y.resize(2);
  data.x << 1.0, 2.0;
  data.y << 0.0, 1.0;
  CHECK_NOTHROW(validate_dataset(data));
  data.x(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate_dataset(data), DataError);
}

TEST_CASE("subset_rows picks rows in the given order") {
  Dataset data;
  data.feature_names = {"a"};
  data.x.resize(4, 1);
  data.x << 10, 20, 30, 40;
  data.y.resize(4);
  data.y << 1, 2, 3, 4;
  auto sub = subset_rows(data, {3, 1});
  CHECK(sub.x(0, 0) == 40);
  CHECK(sub.x(1, 0) == 20);
  CHECK(sub.y[0] == 4);
  CHECK(sub.y[1] == 2);
}
