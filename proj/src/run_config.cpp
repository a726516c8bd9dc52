#include "edgetsn/run_config.hpp"

#include <fstream>
#include <set>

#include "edgetsn/error.hpp"

namespace edgetsn {

using nlohmann::json;
using nlohmann::ordered_json;

void RunConfig::validate() const {
  if (k_train == 0 || k_test == 0) {
    throw ContractError("K must be >= 1");
  }
  if (widths.empty()) {
    throw ContractError("backbone needs at least one block");
  }
  if (flow_window == 0 || !(flow_vmax > 0.0)) {
    throw ContractError("flow window must be >= 1 and vmax > 0");
  }
  if (!(fusion_w_rgb >= 0.0 && fusion_w_rgb <= 1.0)) {
    throw ContractError("fusion weight must lie in [0, 1]");
  }
  train_config().validate();
  if (consensus.kind == ConsensusKind::weighted_average) {
    consensus.validate(k_test);
  }
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.k = k_train;
  t.consensus = consensus;
  t.optimizer = optimizer;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.seed = seed;
  t.crop_height = t.crop_width = crop_size;
  t.record_wall_time = record_wall_time;
  return t;
}

PredictOptions RunConfig::predict_options() const {
  PredictOptions p;
  p.k = k_test;
  p.crop = {test_crop, crop_size, crop_size, seed};
  p.consensus = consensus;
  return p;
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["k_train"] = k_train;
  j["k_test"] = k_test;
  j["test_crop"] = std::string(to_string(test_crop));
  j["crop_size"] = crop_size;
  j["consensus"] = std::string(to_string(consensus.kind));
  j["consensus_weights"] = consensus.weights;
  j["optimizer"] = {{"kind", std::string(to_string(optimizer.kind))},
                    {"learning_rate", optimizer.learning_rate},
                    {"momentum", optimizer.momentum},
                    {"weight_decay", optimizer.weight_decay},
                    {"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2},
                    {"epsilon", optimizer.epsilon}};
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["flow_window"] = flow_window;
  j["flow_vmax"] = flow_vmax;
  j["seed"] = seed;
  j["widths"] = widths;
  j["fusion_w_rgb"] = fusion_w_rgb;
  j["record_wall_time"] = record_wall_time;
  return j;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw DataError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) {
      throw DataError("run config must be a JSON object");
    }
    reject_unknown(j,
                   {"k_train", "k_test", "test_crop", "crop_size", "consensus", "consensus_weights", "optimizer",
                    "batch_size", "epochs", "flow_window", "flow_vmax", "seed", "widths", "fusion_w_rgb",
                    "record_wall_time"},
                   "run config");
    read(j, "k_train", c.k_train);
    read(j, "k_test", c.k_test);
    if (j.contains("test_crop")) {
      c.test_crop = parse_crop_strategy(j.at("test_crop").get<std::string>());
    }
    read(j, "crop_size", c.crop_size);
    if (j.contains("consensus")) {
      c.consensus.kind = parse_consensus(j.at("consensus").get<std::string>());
    }
    read(j, "consensus_weights", c.consensus.weights);
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      reject_unknown(o, {"kind", "learning_rate", "momentum", "weight_decay", "beta1", "beta2", "epsilon"},
                     "optimizer config");
      if (o.contains("kind")) {
        c.optimizer.kind = parse_optimizer(o.at("kind").get<std::string>());
      }
      read(o, "learning_rate", c.optimizer.learning_rate);
      read(o, "momentum", c.optimizer.momentum);
      read(o, "weight_decay", c.optimizer.weight_decay);
      read(o, "beta1", c.optimizer.beta1);
      read(o, "beta2", c.optimizer.beta2);
      read(o, "epsilon", c.optimizer.epsilon);
    }
    read(j, "batch_size", c.batch_size);
    read(j, "epochs", c.epochs);
    read(j, "flow_window", c.flow_window);
    read(j, "flow_vmax", c.flow_vmax);
    read(j, "seed", c.seed);
    read(j, "widths", c.widths);
    read(j, "fusion_w_rgb", c.fusion_w_rgb);
    read(j, "record_wall_time", c.record_wall_time);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad run config: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("bad run config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("bad run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw DataError("cannot open run config " + path.string());
  }
  try {
    return RunConfig::from_json(json::parse(is));
  } catch (const json::exception& e) {
    throw DataError("cannot parse " + path.string() + ": " + e.what());
  }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << config.to_json().dump(2) << '\n';
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
}

}  // namespace edgetsn
