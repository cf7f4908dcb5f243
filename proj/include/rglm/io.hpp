#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rglm/bench.hpp"
#include "rglm/dataset.hpp"

namespace rglm {

/// Round-trip (17 significant digits) text for machine-readable files.
std::string format_double(double v);
/// Six significant digits, for terminal summaries.
std::string format_short(double v);
/// Accepts everything format_double writes, including inf and nan.
double parse_double(const std::string& text);

/// Header `x1,...,xd,z[,y_clean,flipped]`.
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is, const std::string& source = "<stream>");
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

/// Ordered key/value record; `beta_hat` is written last as a comma list.
struct KeyValueRecord {
  std::vector<std::pair<std::string, std::string>> entries;
  Vector<double> beta;

  void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
  void add(const std::string& key, double value) { entries.emplace_back(key, format_double(value)); }
  const std::string* get(const std::string& key) const;
};

void write_record(std::ostream& os, const KeyValueRecord& record);
KeyValueRecord read_record(std::istream& is);
void save_record(const std::string& path, const KeyValueRecord& record);
KeyValueRecord load_record(const std::string& path);

/// Header `method,feature_dist,n,mean_l2_error,stderr,trials,failures`.
void write_error_table_csv(std::ostream& os, const ErrorTable& table);

}  // namespace rglm
