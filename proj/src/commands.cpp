#include "edgetsn/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include <json.hpp>

#include "edgetsn/backbone.hpp"
#include "edgetsn/image_io.hpp"
#include "edgetsn/synthetic.hpp"
#include "edgetsn/train.hpp"
#include "edgetsn/tsn.hpp"

namespace edgetsn {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const UsageError*>(&e) != nullptr) {
    return 1;
  }
  if (dynamic_cast<const DataError*>(&e) != nullptr || dynamic_cast<const InsufficientFramesError*>(&e) != nullptr ||
      dynamic_cast<const ContractError*>(&e) != nullptr) {
    return 2;
  }
  return 3;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw UsageError(message);
  }
}

// Path of `target` as seen from `base` when it lies below it, else absolute.
std::string relative_to(const fs::path& target, const fs::path& base) {
  const fs::path t = fs::weakly_canonical(fs::absolute(target));
  const fs::path b = fs::weakly_canonical(fs::absolute(base));
  const fs::path rel = t.lexically_relative(b);
  if (!rel.empty() && *rel.begin() != "..") {
    return rel.generic_string();
  }
  return t.generic_string();
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  for (const std::string& l : lines) {
    os << l << '\n';
  }
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
}

Modality manifest_modality(const DatasetManifest& m) {
  if (m.records.empty()) {
    throw ContractError("manifest is empty");
  }
  for (const ManifestRecord& r : m.records) {
    if (r.modality != m.records.front().modality) {
      throw DataError("manifest mixes rgb and flow videos");
    }
  }
  return m.records.front().modality;
}

std::string metrics_line(const EpochMetrics& e) {
  ordered_json j;
  j["epoch"] = e.epoch;
  j["mean_loss"] = e.mean_loss;
  j["train_top1"] = e.train_top1;
  j["wall_ms"] = e.wall_ms;
  j["seed"] = e.seed;
  return j.dump();
}

RunConfig run_config_near(const fs::path& weights_dir) {
  const fs::path p = weights_dir / "run_config.json";
  return fs::exists(p) ? load_run_config(p) : RunConfig{};
}

}  // namespace

ManifestRecord run_ingest(const IngestArgs& args) {
  require(!args.input.empty() && !args.out_dir.empty(), "ingest needs --in and --out");
  require(args.options.target_fps > 0.0, "--fps must be positive");
  require(args.options.source_fps > 0.0, "--source-fps must be positive");
  if (!fs::exists(args.input)) {
    throw DataError("input " + args.input.string() + " does not exist");
  }
  const fs::path manifest = args.manifest.empty() ? args.out_dir.parent_path() / "manifest.jsonl" : args.manifest;
  if (!manifest.parent_path().empty()) {
    fs::create_directories(manifest.parent_path());
  }
  ManifestRecord r = ingest(args.input, args.out_dir, args.options);
  r.video_dir = relative_to(args.out_dir, manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path());
  append_manifest(manifest, r);
  return r;
}

fs::path run_flow(const FlowArgs& args) {
  require(!args.manifest.empty() && !args.out_dir.empty(), "flow needs --manifest and --out");
  require(args.window >= 1, "--window must be >= 1");
  require(args.vmax > 0.0, "--vmax must be positive");
  const DatasetManifest in = read_manifest(args.manifest);
  const DatasetManifest out = extract_flow_dataset(in, args.out_dir, args.window, args.vmax);
  const fs::path path = args.out_dir / "manifest.jsonl";
  write_manifest(path, out);
  return path;
}

TrainOutcome run_train(const TrainArgs& args, std::ostream& log) {
  require(!args.manifest.empty() && !args.out_dir.empty(), "train needs --manifest and --out");
  RunConfig config = args.config.empty() ? RunConfig{} : load_run_config(args.config);
  if (args.seed) {
    config.seed = *args.seed;
  }
  if (args.epochs) {
    config.epochs = *args.epochs;
  }
  try {
    config.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }

  const DatasetManifest manifest = read_manifest(args.manifest);
  const Modality modality = manifest_modality(manifest);
  TrainOutcome outcome;
  std::vector<LabeledClip> data;
  std::vector<std::string> skipped_lines;
  for (const ManifestRecord& r : manifest.records) {
    try {
      data.push_back({load_clip(manifest, r), r.label});
    } catch (const DataError& e) {
      log << "warning: skipping " << r.video_dir << ": " << e.what() << '\n';
      outcome.skipped.push_back(r.video_dir);
      ordered_json j;
      j["video_dir"] = r.video_dir;
      j["reason"] = e.what();
      skipped_lines.push_back(j.dump());
    }
  }
  if (data.empty()) {
    throw DataError("no readable videos in " + args.manifest.string());
  }
  outcome.videos = data.size();

  const BackboneSpec spec = default_backbone_spec(modality, manifest.num_classes(), config.widths);
  const BackboneWeights init = init_weights(spec, mix_seed(config.seed, 0x5eed));
  fs::create_directories(args.out_dir);
  save_run_config(args.out_dir / "run_config.json", config);

  std::ofstream metrics(args.out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  const TrainResult result = train(data, spec, init, config.train_config(), [&](const EpochMetrics& e) {
    metrics << metrics_line(e) << '\n';
    metrics.flush();
    char line[160];
    std::snprintf(line, sizeof line, "epoch %zu  loss %.6f  top1 %.4f\n", e.epoch, e.mean_loss, e.train_top1);
    log << line;
  });
  if (!metrics) {
    throw DataError("cannot write metrics log in " + args.out_dir.string());
  }
  save_backbone(args.out_dir, spec, result.weights);
  if (!skipped_lines.empty()) {
    write_lines(args.out_dir / "skipped.jsonl", skipped_lines);
  }
  outcome.epochs = result.epochs;
  return outcome;
}

std::string prediction_line(const std::string& video_dir, std::size_t label, const Tensor& p) {
  ordered_json j;
  j["video_dir"] = video_dir;
  j["label"] = label;
  j["predicted"] = argmax(p.data());
  j["probabilities"] = std::vector<double>(p.data().begin(), p.data().end());
  return j.dump();
}

namespace {

std::vector<Tensor> predict_manifest(const DatasetManifest& manifest, const BackboneSpec& spec,
                                     const BackboneWeights& weights, const PredictOptions& options) {
  if (manifest_modality(manifest) != spec.modality) {
    throw DataError("weights expect " + std::string(to_string(spec.modality)) + " videos");
  }
  if (manifest.num_classes() > spec.num_classes) {
    throw DataError("manifest labels exceed the " + std::to_string(spec.num_classes) + " classes of the weights");
  }
  std::vector<Tensor> out(manifest.records.size());
  parallel_for(manifest.records.size(), [&](std::size_t i) {
    const ManifestRecord& r = manifest.records[i];
    PredictOptions o = options;
    o.crop.seed = mix_seed(options.crop.seed, i);
    out[i] = predict_video(spec, weights, load_clip(manifest, r), o);
  });
  return out;
}

PredictOptions eval_options(const EvalArgs& args, const RunConfig& config) {
  PredictOptions o = config.predict_options();
  if (args.k) {
    o.k = *args.k;
  }
  if (args.crops) {
    o.crop.strategy = *args.crops;
  }
  if (args.crop_size) {
    o.crop.height = o.crop.width = *args.crop_size;
  }
  if (args.seed) {
    o.crop.seed = *args.seed;
  }
  o.consensus = ConsensusSpec{};
  if (config.consensus.kind != ConsensusKind::weighted_average) {
    o.consensus = config.consensus;
  }
  return o;
}

}  // namespace

EvalOutcome run_eval(const EvalArgs& args) {
  require(!args.manifest.empty() && !args.weights.empty(), "eval needs --manifest and --weights");
  require(args.weights_flow.empty() == args.manifest_flow.empty(),
          "--weights-flow and --manifest-flow must be given together");
  require(!args.fuse || (*args.fuse >= 0.0 && *args.fuse <= 1.0), "--fuse must lie in [0, 1]");
  require(!args.k || *args.k >= 1, "--k must be >= 1");

  const auto [spec, weights] = load_backbone(args.weights);
  const RunConfig config = run_config_near(args.weights);
  const DatasetManifest manifest = read_manifest(args.manifest);

  EvalOutcome out;
  for (const ManifestRecord& r : manifest.records) {
    out.video_dirs.push_back(r.video_dir);
    out.labels.push_back(r.label);
  }
  std::vector<Tensor> first = predict_manifest(manifest, spec, weights, eval_options(args, config));

  if (args.weights_flow.empty()) {
    out.predictions = first;
    (spec.modality == Modality::rgb ? out.rgb : out.flow) = std::move(first);
  } else {
    if (spec.modality != Modality::rgb) {
      throw UsageError("--weights must be the rgb stream when --weights-flow is given");
    }
    const auto [fspec, fweights] = load_backbone(args.weights_flow);
    const DatasetManifest fmanifest = read_manifest(args.manifest_flow);
    if (fmanifest.records.size() != manifest.records.size()) {
      throw DataError("rgb and flow manifests list different numbers of videos");
    }
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
      if (fmanifest.records[i].label != manifest.records[i].label) {
        throw DataError("rgb and flow manifests disagree on the label of video " + std::to_string(i));
      }
    }
    out.rgb = std::move(first);
    out.flow = predict_manifest(fmanifest, fspec, fweights, eval_options(args, run_config_near(args.weights_flow)));
    const double w = args.fuse.value_or(config.fusion_w_rgb);
    for (std::size_t i = 0; i < out.rgb.size(); ++i) {
      out.predictions.push_back(fuse_streams(out.rgb[i], out.flow[i], w));
    }
  }
  out.top1 = top1_accuracy(out.predictions, out.labels);

  if (!args.out.empty()) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < out.predictions.size(); ++i) {
      lines.push_back(prediction_line(out.video_dirs[i], out.labels[i], out.predictions[i]));
    }
    if (!args.out.parent_path().empty()) {
      fs::create_directories(args.out.parent_path());
    }
    write_lines(args.out, lines);
  }
  return out;
}

void run_inflate(const InflateArgs& args) {
  require(!args.weights2d.empty() && !args.temporal_sizes.empty() && !args.out_dir.empty(),
          "inflate needs --weights2d, --temporal-sizes and --out");
  const auto [spec, weights] = load_backbone(args.weights2d);
  const TemporalSizes sizes = load_temporal_sizes(args.temporal_sizes);
  const auto [spec3, weights3] = inflate_backbone(spec, weights, sizes);
  save_backbone(args.out_dir, spec3, weights3);
}

BenchMemOutcome run_bench_mem(const BenchMemArgs& args) {
  require(!args.spec.empty(), "bench-mem needs --spec");
  require(!args.crops.empty(), "bench-mem needs at least one crop strategy");
  require(args.k >= 1 && args.batch >= 1, "--k and --batch must be >= 1");
  const BackboneSpec spec = fs::is_directory(args.spec) ? load_spec(args.spec / "spec.json") : load_spec(args.spec);

  BenchMemOutcome out;
  for (const CropStrategy c : args.crops) {
    InferenceProtocol p;
    p.k = args.k;
    p.strategy = c;
    p.batch_size = args.batch;
    p.crop_height = p.crop_width = args.crop_size;
    p.temporal_frames = args.temporal_frames;
    try {
      out.reports.push_back(profile_inference(spec, p, args.frame_height, args.frame_width));
    } catch (const ContractError& e) {
      throw UsageError(e.what());
    }
  }
  if (args.measure) {
    const BackboneWeights weights = init_weights(spec, args.seed);
    std::mt19937_64 rng(args.seed);
    VideoClip clip;
    clip.modality = spec.modality;
    const std::size_t frames = args.k + args.temporal_frames;
    for (std::size_t t = 0; t < frames; ++t) {
      clip.frames.push_back(
          Tensor::uniform({modality_channels(spec.modality), args.frame_height, args.frame_width}, rng, 0.0, 1.0));
    }
    for (const MemoryReport& r : out.reports) {
      PredictOptions o;
      o.k = args.k;
      o.crop = {r.protocol.strategy, r.protocol.crop_height, r.protocol.crop_width, args.seed};
      o.temporal_frames = args.temporal_frames;
      std::uint64_t peak = 0;
      for (std::size_t b = 0; b < args.batch; ++b) {
        peak = std::max(peak, measure_runtime_peak([&] { predict_video(spec, weights, clip, o); }));
      }
      out.measured.push_back(peak);
    }
  }
  out.table = format_memory_table(out.reports);
  if (!args.out.empty()) {
    ordered_json j;
    j["reports"] = ordered_json::array();
    for (const MemoryReport& r : out.reports) {
      j["reports"].push_back(r.to_json());
    }
    if (out.reports.size() >= 2 && out.reports.front().peak_activation_bytes > 0) {
      j["activation_ratio"] = static_cast<double>(out.reports.back().peak_activation_bytes) /
                              static_cast<double>(out.reports.front().peak_activation_bytes);
    }
    if (args.measure) {
      j["measured_peak_bytes"] = out.measured;
    }
    std::ofstream os(args.out, std::ios::binary | std::ios::trunc);
    os << j.dump(2) << '\n';
    if (!os) {
      throw DataError("cannot write " + args.out.string());
    }
  }
  return out;
}

fs::path run_synth(const SynthArgs& args) {
  require(!args.out_dir.empty(), "synth needs --out");
  require(args.videos_per_class >= 1, "--per-class must be >= 1");
  require(args.frames >= 1 && args.size >= 16, "synthetic clips need frames and a side of at least 16");
  SyntheticConfig config;
  config.videos_per_class = args.videos_per_class;
  config.frames = args.frames;
  config.size = args.size;
  config.square = std::min(config.square, args.size / 2);
  config.appearance_classes = args.appearance_classes;
  config.seed = args.seed;
  const std::vector<std::string> names = synthetic_class_names(args.appearance_classes);
  const fs::path raw = args.out_dir / "raw";
  const fs::path rgb = args.out_dir / "rgb";
  fs::create_directories(raw);
  fs::create_directories(rgb);
  const fs::path manifest = rgb / "manifest.jsonl";
  fs::remove(manifest);

  const std::vector<LabeledClip> data = synthetic_dataset(config);
  for (std::size_t i = 0; i < data.size(); ++i) {
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%04zu", names[data[i].label].c_str(), i);
    const fs::path video = raw / (std::string(stem) + ".edgv");
    write_raw_video(video, to_raw_video(data[i].clip.frames, 25.0f));
    IngestArgs in;
    in.input = video;
    in.out_dir = rgb / stem;
    in.manifest = manifest;
    in.options.label = data[i].label;
    in.options.class_name = names[data[i].label];
    run_ingest(in);
  }
  return manifest;
}

}  // namespace edgetsn
