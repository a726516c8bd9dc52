#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "edgetsn/optimizer.hpp"
#include "edgetsn/sampling.hpp"
#include "edgetsn/train.hpp"
#include "edgetsn/tsn.hpp"

namespace edgetsn {

// Everything a train or eval run depends on. Saved verbatim into every run
// directory so a run can be repeated from its own output.
struct RunConfig {
  std::size_t k_train = 3;
  std::size_t k_test = 25;
  CropStrategy test_crop = CropStrategy::center1;
  // Side of the square training/testing crop; 0 keeps the full frame.
  std::size_t crop_size = 0;
  ConsensusSpec consensus;
  OptimizerConfig optimizer{OptimizerKind::adam, 0.002};
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  std::size_t flow_window = 3;
  double flow_vmax = 8.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> widths{8, 8, 16, 16};
  double fusion_w_rgb = 0.5;
  bool record_wall_time = false;

  void validate() const;
  TrainConfig train_config() const;
  PredictOptions predict_options() const;

  nlohmann::ordered_json to_json() const;
  // Missing keys keep their defaults; unknown keys are a DataError.
  static RunConfig from_json(const nlohmann::json& j);
  bool operator==(const RunConfig&) const = default;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace edgetsn
