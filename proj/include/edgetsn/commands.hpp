#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edgetsn/dataset.hpp"
#include "edgetsn/error.hpp"
#include "edgetsn/memory.hpp"
#include "edgetsn/run_config.hpp"

namespace edgetsn {

// Bad or missing command-line input; the CLI exits with status 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

// 0 success, 1 usage, 2 data, 3 internal invariant.
int exit_code_for(const std::exception& e) noexcept;

struct IngestArgs {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  std::filesystem::path manifest;  // empty: out_dir/../manifest.jsonl
  IngestOptions options;
};
ManifestRecord run_ingest(const IngestArgs& args);

struct FlowArgs {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::size_t window = 3;
  double vmax = 8.0;
};
// Returns the path of the written flow manifest (out_dir/manifest.jsonl).
std::filesystem::path run_flow(const FlowArgs& args);

struct TrainArgs {
  std::filesystem::path manifest;
  std::filesystem::path config;  // empty: defaults
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
};
struct TrainOutcome {
  std::size_t videos = 0;
  std::vector<std::string> skipped;
  std::vector<EpochMetrics> epochs;
};
// Writes the backbone directory plus metrics.jsonl, run_config.json and,
// when videos could not be read, skipped.jsonl into out_dir.
TrainOutcome run_train(const TrainArgs& args, std::ostream& log);

struct EvalArgs {
  std::filesystem::path manifest;
  std::filesystem::path weights;
  std::filesystem::path manifest_flow;
  std::filesystem::path weights_flow;
  std::optional<double> fuse;
  std::optional<std::size_t> k;
  std::optional<CropStrategy> crops;
  std::optional<std::size_t> crop_size;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;  // predictions JSON-lines; empty: not written
};
struct EvalOutcome {
  std::vector<std::string> video_dirs;
  std::vector<std::size_t> labels;
  std::vector<Tensor> predictions;  // fused when two streams are given
  std::vector<Tensor> rgb;
  std::vector<Tensor> flow;
  double top1 = 0.0;
};
EvalOutcome run_eval(const EvalArgs& args);
std::string prediction_line(const std::string& video_dir, std::size_t label, const Tensor& p);

struct InflateArgs {
  std::filesystem::path weights2d;
  std::filesystem::path temporal_sizes;
  std::filesystem::path out_dir;
};
void run_inflate(const InflateArgs& args);

struct BenchMemArgs {
  std::filesystem::path spec;  // spec.json or a backbone directory
  std::size_t k = 25;
  std::vector<CropStrategy> crops{CropStrategy::center1, CropStrategy::tencrop};
  std::size_t batch = 1;
  std::size_t frame_height = 32;
  std::size_t frame_width = 32;
  std::size_t crop_size = 0;
  std::size_t temporal_frames = 1;
  std::filesystem::path out;  // JSON report; empty: not written
  // Also time-free runtime measurement of predict_video on random frames.
  bool measure = false;
  std::uint64_t seed = 0;
};
struct BenchMemOutcome {
  std::vector<MemoryReport> reports;
  std::vector<std::uint64_t> measured;  // filled when args.measure
  std::string table;
};
BenchMemOutcome run_bench_mem(const BenchMemArgs& args);

struct SynthArgs {
  std::filesystem::path out_dir;
  std::size_t videos_per_class = 40;
  std::size_t frames = 30;
  std::size_t size = 32;
  bool appearance_classes = false;
  std::uint64_t seed = 0;
};
// Writes out_dir/raw/*.edgv and ingests them into out_dir/rgb with
// out_dir/rgb/manifest.jsonl. Returns the manifest path.
std::filesystem::path run_synth(const SynthArgs& args);

}  // namespace edgetsn
