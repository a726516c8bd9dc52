#include "edgetsn/train.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "edgetsn/error.hpp"

namespace edgetsn {

void TrainConfig::validate() const {
  if (k == 0) {
    throw ContractError("K must be >= 1");
  }
  if (batch_size == 0) {
    throw ContractError("batch size must be >= 1");
  }
  if ((crop_height == 0) != (crop_width == 0)) {
    throw ContractError("crop height and width must both be set or both be 0");
  }
  consensus.validate(k);
  optimizer.validate();
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

LabeledSample training_sample(const LabeledClip& example, const BackboneSpec& spec, const TrainConfig& config,
                              std::uint64_t seed) {
  const SegmentPlan plan = plan_segments(example.clip.frame_count(), config.k);
  const std::vector<std::size_t> indices = training_indices(plan, seed);
  LabeledSample sample;
  sample.y = one_hot(example.label, spec.num_classes);
  sample.snippets.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    Tensor snippet = make_snippet(example.clip, indices[k], spec, config.temporal_frames);
    if (config.crop_height != 0) {
      snippet = std::move(crop(snippet, CropStrategy::random1, config.crop_height, config.crop_width,
                               mix_seed(seed, k + 1))
                              .front());
    }
    sample.snippets.push_back(std::move(snippet));
  }
  return sample;
}

TrainResult train(const std::vector<LabeledClip>& data, const BackboneSpec& spec, const BackboneWeights& init,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  spec.validate();
  check_weights(spec, init);
  if (data.empty()) {
    throw ContractError("training set is empty");
  }
  for (const LabeledClip& ex : data) {
    if (ex.label >= spec.num_classes) {
      throw ContractError("label " + std::to_string(ex.label) + " outside " + std::to_string(spec.num_classes) +
                          " classes");
    }
    if (ex.clip.modality != spec.modality) {
      throw ContractError("clip '" + ex.clip.source_id + "' is " + std::string(to_string(ex.clip.modality)) +
                          " but the backbone expects " + std::string(to_string(spec.modality)));
    }
  }

  TrainResult result;
  result.weights = init;
  const std::unique_ptr<Optimizer> optimizer = make_optimizer(config.optimizer);
  std::vector<std::size_t> order(data.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t epoch_seed = mix_seed(config.seed, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), rng);

    EpochMetrics m;
    m.epoch = epoch;
    m.seed = epoch_seed;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      GradientMap batch_grads;
      for (std::size_t pos = begin; pos < end; ++pos) {
        const LabeledClip& ex = data[order[pos]];
        const LabeledSample sample = training_sample(ex, spec, config, mix_seed(epoch_seed, pos));
        TsnStep step = tsn_forward_backward(spec, result.weights, sample, config.consensus);
        loss_sum += step.loss;
        if (argmax(step.aggregate.data()) == ex.label) {
          ++correct;
        }
        for (auto& [name, g] : step.grads) {
          auto it = batch_grads.find(name);
          if (it == batch_grads.end()) {
            batch_grads.emplace(name, std::move(g));
          } else {
            for (std::size_t i = 0; i < g.size(); ++i) {
              it->second[i] += g[i];
            }
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (auto& [name, g] : batch_grads) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] *= inv;
        }
      }
      optimizer->step(result.weights.params, batch_grads);
      ++m.steps;
    }
    m.videos = order.size();
    m.mean_loss = loss_sum / static_cast<double>(order.size());
    m.train_top1 = static_cast<double>(correct) / static_cast<double>(order.size());
    if (config.record_wall_time) {
      m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    result.epochs.push_back(m);
    if (on_epoch) {
      on_epoch(m);
    }
  }
  return result;
}

}  // namespace edgetsn
