#include "oad/bench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "oad/metrics/metrics.hpp"

namespace oad::bench {

namespace {

struct GroupStats {
  std::size_t n = 0;
  double pr_mean = 0.0, pr_std = 0.0;
  double roc_mean = 0.0, roc_std = 0.0;
};

GroupStats summarize(const std::vector<const ResultRecord*>& recs) {
  GroupStats g;
  g.n = recs.size();
  for (const auto* r : recs) {
    g.pr_mean += r->auc_pr;
    g.roc_mean += r->auc_roc;
  }
  g.pr_mean /= static_cast<double>(g.n);
  g.roc_mean /= static_cast<double>(g.n);
  for (const auto* r : recs) {
    g.pr_std += (r->auc_pr - g.pr_mean) * (r->auc_pr - g.pr_mean);
    g.roc_std += (r->auc_roc - g.roc_mean) * (r->auc_roc - g.roc_mean);
  }
  if (g.n > 1) {
    g.pr_std = std::sqrt(g.pr_std / static_cast<double>(g.n - 1));
    g.roc_std = std::sqrt(g.roc_std / static_cast<double>(g.n - 1));
  } else {
    g.pr_std = g.roc_std = 0.0;
  }
  return g;
}

std::string stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

}  // namespace

std::vector<ResultRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open results file: " + path);
  }
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_jsonl(line));
  }
  return out;
}

void report(const std::vector<ResultRecord>& records,
            const ReportOptions& opts, std::ostream& out) {
  const bool by_gamma =
      std::find(opts.group_keys.begin(), opts.group_keys.end(), "gamma_l") !=
      opts.group_keys.end();

  // key: (dataset, gamma text, loss)
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<const ResultRecord*>>
      groups;
  std::size_t failed = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++failed;
      continue;
    }
    char gbuf[32] = "";
    if (by_gamma) std::snprintf(gbuf, sizeof(gbuf), "%g", r.gamma_l);
    groups[{r.dataset, gbuf, r.loss}].push_back(&r);
  }

  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %-10s %-18s %3s  %-15s %-15s",
                "dataset", by_gamma ? "gamma_l" : "", "loss", "n",
                "auc_pr", "auc_roc");
  out << line << '\n';
  for (const auto& [key, recs] : groups) {
    const GroupStats g = summarize(recs);
    char pr[32], roc[32];
    std::snprintf(pr, sizeof(pr), "%.3f+-%.3f", g.pr_mean, g.pr_std);
    std::snprintf(roc, sizeof(roc), "%.3f+-%.3f", g.roc_mean, g.roc_std);
    std::snprintf(line, sizeof(line), "%-16s %-10s %-18s %3zu  %-15s %-15s",
                  std::get<0>(key).c_str(), std::get<1>(key).c_str(),
                  std::get<2>(key).c_str(), g.n, pr, roc);
    out << line << '\n';
  }
  if (failed > 0) {
    out << "(" << failed << " failed record(s) excluded)\n";
  }

  // Paired significance: per-dataset mean AUC-PR of the baseline loss
  // against each competitor.
  std::set<std::string> losses;
  std::set<std::pair<std::string, std::string>> cells;  // (dataset, gamma)
  for (const auto& [key, recs] : groups) {
    losses.insert(std::get<2>(key));
    cells.insert({std::get<0>(key), std::get<1>(key)});
  }
  if (losses.count(opts.baseline) == 0) {
    out << "baseline loss '" << opts.baseline
        << "' absent; significance skipped\n";
    return;
  }
  out << "\none-sided Wilcoxon signed-rank: " << opts.baseline
      << " vs competitor (paired over dataset cells)\n";
  for (const auto& other : losses) {
    if (other == opts.baseline) continue;
    std::vector<double> base_means;
    std::vector<double> other_means;
    for (const auto& cell : cells) {
      const auto bi = groups.find({cell.first, cell.second, opts.baseline});
      const auto oi = groups.find({cell.first, cell.second, other});
      if (bi == groups.end() || oi == groups.end()) continue;
      base_means.push_back(summarize(bi->second).pr_mean);
      other_means.push_back(summarize(oi->second).pr_mean);
    }
    if (base_means.empty()) {
      out << "  vs " << other << ": n/a (no paired cells)\n";
      continue;
    }
    try {
      const metrics::WilcoxonResult w =
          metrics::wilcoxon_signed_rank(base_means, other_means);
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "  vs %-18s p=%.4f %-3s (pairs=%zu, W+=%.1f%s)",
                    other.c_str(), w.p_value, stars(w.p_value).c_str(),
                    w.n_used, w.statistic, w.exact ? "" : ", approx");
      out << buf << '\n';
    } catch (const std::invalid_argument&) {
      out << "  vs " << other << ": n/a (all differences zero)\n";
    }
  }
}

}  // namespace oad::bench
