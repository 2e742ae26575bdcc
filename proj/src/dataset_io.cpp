#include "rpx/dataset_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rpx {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

json knapsack_fields(const KnapsackInstance& inst) {
  return json{{"values", inst.values},
              {"nominal_weights", inst.nominal_weights.data},
              {"capacities", inst.capacities},
              {"rho", inst.rho},
              {"norm_kind", norm_name(inst.norm_kind)}};
}

json inventory_fields(const InventoryInstance& inst) {
  return json{{"revenue", inst.revenue},
              {"unit_cost", inst.unit_cost},
              {"base_demand", inst.base_demand},
              {"sensitivity", inst.sensitivity.data},
              {"nominal_u", inst.nominal_u},
              {"rho", inst.rho},
              {"norm_kind", norm_name(inst.norm_kind)},
              {"capacity", inst.capacity},
              {"x_upper", inst.x_upper}};
}

KnapsackInstance parse_knapsack(const json& f) {
  KnapsackInstance inst;
  inst.values = f.at("values").get<Vec>();
  inst.capacities = f.at("capacities").get<Vec>();
  Vec w = f.at("nominal_weights").get<Vec>();
  const std::size_t m = inst.capacities.size();
  const std::size_t d = inst.values.size();
  if (w.size() != m * d)
    throw std::runtime_error("dataset: nominal_weights length mismatch");
  inst.nominal_weights = DenseMatrix(m, d);
  inst.nominal_weights.data = std::move(w);
  inst.rho = f.at("rho").get<double>();
  inst.norm_kind = norm_from_name(f.at("norm_kind").get<std::string>());
  return inst;
}

InventoryInstance parse_inventory(const json& f) {
  InventoryInstance inst;
  inst.revenue = f.at("revenue").get<Vec>();
  inst.unit_cost = f.at("unit_cost").get<Vec>();
  inst.base_demand = f.at("base_demand").get<Vec>();
  inst.nominal_u = f.at("nominal_u").get<Vec>();
  Vec q = f.at("sensitivity").get<Vec>();
  const std::size_t n = inst.revenue.size();
  const std::size_t k = inst.nominal_u.size();
  if (q.size() != n * k)
    throw std::runtime_error("dataset: sensitivity length mismatch");
  inst.sensitivity = DenseMatrix(n, k);
  inst.sensitivity.data = std::move(q);
  inst.rho = f.at("rho").get<double>();
  inst.norm_kind = norm_from_name(f.at("norm_kind").get<std::string>());
  inst.capacity = f.at("capacity").get<double>();
  inst.x_upper = f.at("x_upper").get<Vec>();
  return inst;
}

}  // namespace

void write_dataset_jsonl(std::ostream& os, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    json line{{"app", application_name(ds.app)},
              {"seed", ds.seed},
              {"gen_version", ds.gen_version},
              {"fields", ds.is_knapsack() ? knapsack_fields(ds.knapsack[i])
                                          : inventory_fields(ds.inventory[i])}};
    os << line.dump() << '\n';
  }
}

void write_dataset_jsonl(const std::string& path, const Dataset& ds) {
  auto os = open_out(path);
  write_dataset_jsonl(os, ds);
}

Dataset read_dataset_jsonl(std::istream& is) {
  Dataset ds;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const Application app = application_from_name(j.at("app").get<std::string>());
    if (first) {
      ds.app = app;
      ds.seed = j.at("seed").get<std::uint64_t>();
      ds.gen_version = j.at("gen_version").get<std::string>();
      first = false;
    } else if (app != ds.app) {
      throw std::runtime_error("dataset: mixed applications in one file");
    }
    if (ds.is_knapsack())
      ds.knapsack.push_back(parse_knapsack(j.at("fields")));
    else
      ds.inventory.push_back(parse_inventory(j.at("fields")));
  }
  if (first) throw std::runtime_error("dataset: empty file");
  return ds;
}

Dataset read_dataset_jsonl(const std::string& path) {
  auto is = open_in(path);
  return read_dataset_jsonl(is);
}

bool LabelSet::has(std::size_t instance_id) const {
  for (std::size_t id : ids)
    if (id == instance_id) return true;
  return false;
}

std::size_t LabelSet::position(std::size_t instance_id) const {
  for (std::size_t p = 0; p < ids.size(); ++p)
    if (ids[p] == instance_id) return p;
  throw std::out_of_range("labels: no entry for instance " +
                          std::to_string(instance_id));
}

void write_labels_jsonl(std::ostream& os, const LabelSet& labels) {
  for (std::size_t p = 0; p < labels.size(); ++p) {
    json line{{"id", labels.ids[p]},
              {"x_star", labels.x_star[p]},
              {"f_star", labels.f_star[p]},
              {"solve_time", labels.solve_time[p]}};
    os << line.dump() << '\n';
  }
}

void write_labels_jsonl(const std::string& path, const LabelSet& labels) {
  auto os = open_out(path);
  write_labels_jsonl(os, labels);
}

LabelSet read_labels_jsonl(std::istream& is, Application app) {
  LabelSet labels;
  labels.app = app;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    labels.ids.push_back(j.at("id").get<std::size_t>());
    labels.x_star.push_back(j.at("x_star").get<Vec>());
    labels.f_star.push_back(j.at("f_star").get<double>());
    labels.solve_time.push_back(j.at("solve_time").get<double>());
  }
  return labels;
}

LabelSet read_labels_jsonl(const std::string& path, Application app) {
  auto is = open_in(path);
  return read_labels_jsonl(is, app);
}

}  // namespace rpx
