#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "rpx/problems.hpp"

namespace rpx {

// Optimal solutions produced by the reference solvers, keyed by the
// instance's position in its dataset file.
struct LabelSet {
  Application app = Application::knapsack_cont;
  std::vector<std::size_t> ids;
  std::vector<Vec> x_star;
  std::vector<double> f_star;
  std::vector<double> solve_time;

  std::size_t size() const { return ids.size(); }
  bool has(std::size_t instance_id) const;
  std::size_t position(std::size_t instance_id) const;
};

// One JSON object per line: {"app", "seed", "gen_version", "fields": {...}}.
void write_dataset_jsonl(std::ostream& os, const Dataset& ds);
void write_dataset_jsonl(const std::string& path, const Dataset& ds);
Dataset read_dataset_jsonl(std::istream& is);
Dataset read_dataset_jsonl(const std::string& path);

// One JSON object per line: {"id", "x_star", "f_star", "solve_time"}.
void write_labels_jsonl(std::ostream& os, const LabelSet& labels);
void write_labels_jsonl(const std::string& path, const LabelSet& labels);
LabelSet read_labels_jsonl(std::istream& is, Application app);
LabelSet read_labels_jsonl(const std::string& path, Application app);

}  // namespace rpx
