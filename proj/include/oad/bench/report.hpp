#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "oad/bench/config.hpp"

namespace oad::bench {

struct ReportOptions {
  std::vector<std::string> group_keys = {"loss", "dataset"};
  std::string baseline = "overlap";
};

std::vector<ResultRecord> load_records(const std::string& path);

// Aggregate table (mean +- std per group) plus one-sided Wilcoxon
// significance marks of the baseline loss against each competitor, paired
// over per-dataset means.
void report(const std::vector<ResultRecord>& records,
            const ReportOptions& opts, std::ostream& out);

}  // namespace oad::bench
