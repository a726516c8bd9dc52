// Command-line front end: ingest, flow, train, eval, inflate, bench-mem, synth.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "edgetsn/commands.hpp"

using namespace edgetsn;

namespace {

CropStrategy crop_arg(const std::string& s) {
  try {
    return parse_crop_strategy(s);
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
}

std::vector<CropStrategy> crop_list(const std::string& s) {
  std::vector<CropStrategy> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(crop_arg(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal segment networks on small devices"};
  app.require_subcommand(1);

  IngestArgs ingest;
  std::string ingest_in, ingest_out, ingest_manifest;
  auto* c_ingest = app.add_subcommand("ingest", "Decode a frame directory or EDGV video into normalised frames");
  c_ingest->add_option("--in", ingest_in, "PPM/PGM frame directory or .edgv file")->required();
  c_ingest->add_option("--out", ingest_out, "Output video directory")->required();
  c_ingest->add_option("--manifest", ingest_manifest, "Manifest to append to (default: <out>/../manifest.jsonl)");
  c_ingest->add_option("--fps", ingest.options.target_fps, "Target frame rate")->default_val(25.0);
  c_ingest->add_option("--source-fps", ingest.options.source_fps, "Frame rate of a frame directory")
      ->default_val(25.0);
  c_ingest->add_option("--label", ingest.options.label, "Class index")->default_val(0);
  c_ingest->add_option("--class", ingest.options.class_name, "Class name");

  FlowArgs flow;
  std::string flow_manifest, flow_out;
  auto* c_flow = app.add_subcommand("flow", "Extract Lucas-Kanade flow for every video of a manifest");
  c_flow->add_option("--manifest", flow_manifest, "RGB manifest")->required();
  c_flow->add_option("--out", flow_out, "Output directory for the flow dataset")->required();
  c_flow->add_option("--window", flow.window, "Window radius")->default_val(3);
  c_flow->add_option("--vmax", flow.vmax, "Normalisation bound in px/frame")->default_val(8.0);

  TrainArgs train;
  std::string train_manifest, train_config, train_out;
  std::uint64_t train_seed = 0;
  std::size_t train_epochs = 0;
  auto* c_train = app.add_subcommand("train", "Train one stream");
  c_train->add_option("--manifest", train_manifest, "Dataset manifest")->required();
  c_train->add_option("--config", train_config, "Run configuration JSON");
  c_train->add_option("--out", train_out, "Output weights directory")->required();
  auto* o_train_seed = c_train->add_option("--seed", train_seed, "Override the configured seed");
  auto* o_train_epochs = c_train->add_option("--epochs", train_epochs, "Override the configured epoch count");

  EvalArgs eval;
  std::string eval_manifest, eval_weights, eval_wflow, eval_mflow, eval_crops, eval_out;
  double eval_fuse = 0.5;
  std::size_t eval_k = 25, eval_crop_size = 0;
  std::uint64_t eval_seed = 0;
  auto* c_eval = app.add_subcommand("eval", "Predict every video of a manifest and report top-1 accuracy");
  c_eval->add_option("--manifest", eval_manifest, "Dataset manifest (rgb when fusing)")->required();
  c_eval->add_option("--weights", eval_weights, "Weights directory (rgb when fusing)")->required();
  c_eval->add_option("--weights-flow", eval_wflow, "Flow-stream weights directory");
  c_eval->add_option("--manifest-flow", eval_mflow, "Flow manifest aligned with --manifest");
  auto* o_fuse = c_eval->add_option("--fuse", eval_fuse, "RGB weight of the score fusion");
  auto* o_k = c_eval->add_option("--k", eval_k, "Test segments");
  auto* o_crops = c_eval->add_option("--crops", eval_crops, "center1 | tencrop | random10");
  auto* o_crop_size = c_eval->add_option("--crop-size", eval_crop_size, "Square crop side");
  auto* o_eval_seed = c_eval->add_option("--seed", eval_seed, "Seed for random crops");
  c_eval->add_option("--out", eval_out, "Write JSON-lines predictions here");

  InflateArgs inflate;
  std::string inf_w, inf_t, inf_out;
  auto* c_inflate = app.add_subcommand("inflate", "Inflate 2d weights into a 3d backbone");
  c_inflate->add_option("--weights2d", inf_w, "2d weights directory")->required();
  c_inflate->add_option("--temporal-sizes", inf_t, "JSON object layer -> temporal extent")->required();
  c_inflate->add_option("--out", inf_out, "Output weights directory")->required();

  BenchMemArgs bench;
  std::string bench_spec, bench_crops = "center1,tencrop", bench_out;
  auto* c_bench = app.add_subcommand("bench-mem", "Model (and optionally measure) inference memory");
  c_bench->add_option("--spec", bench_spec, "spec.json or weights directory")->required();
  c_bench->add_option("--k", bench.k, "Test segments")->default_val(25);
  c_bench->add_option("--crops", bench_crops, "Comma-separated crop strategies")->default_val("center1,tencrop");
  c_bench->add_option("--batch", bench.batch, "Videos per batch")->default_val(1);
  c_bench->add_option("--height", bench.frame_height, "Frame height")->default_val(32);
  c_bench->add_option("--width", bench.frame_width, "Frame width")->default_val(32);
  c_bench->add_option("--crop-size", bench.crop_size, "Square crop side (0 = full frame)")->default_val(0);
  c_bench->add_option("--temporal-frames", bench.temporal_frames, "Frames per 3d snippet")->default_val(1);
  c_bench->add_option("--out", bench_out, "Write the JSON report here");
  c_bench->add_flag("--measure", bench.measure, "Also measure predict_video on random frames");
  c_bench->add_option("--seed", bench.seed, "Seed for the measured run")->default_val(0);

  SynthArgs synth;
  std::string synth_out;
  auto* c_synth = app.add_subcommand("synth", "Generate and ingest the synthetic motion dataset");
  c_synth->add_option("--out", synth_out, "Output directory")->required();
  c_synth->add_option("--per-class", synth.videos_per_class, "Videos per class")->default_val(40);
  c_synth->add_option("--frames", synth.frames, "Frames per video")->default_val(30);
  c_synth->add_option("--size", synth.size, "Frame side")->default_val(32);
  c_synth->add_flag("--appearance", synth.appearance_classes, "Add the two still, colour-coded classes");
  c_synth->add_option("--seed", synth.seed, "Generator seed")->default_val(0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (c_ingest->parsed()) {
      ingest.input = ingest_in;
      ingest.out_dir = ingest_out;
      ingest.manifest = ingest_manifest;
      const ManifestRecord r = run_ingest(ingest);
      std::cout << manifest_line(r) << '\n';
    } else if (c_flow->parsed()) {
      flow.manifest = flow_manifest;
      flow.out_dir = flow_out;
      std::cout << run_flow(flow).string() << '\n';
    } else if (c_train->parsed()) {
      train.manifest = train_manifest;
      train.config = train_config;
      train.out_dir = train_out;
      if (*o_train_seed) train.seed = train_seed;
      if (*o_train_epochs) train.epochs = train_epochs;
      const TrainOutcome t = run_train(train, std::cerr);
      std::cout << "trained on " << t.videos << " videos, skipped " << t.skipped.size() << '\n';
    } else if (c_eval->parsed()) {
      eval.manifest = eval_manifest;
      eval.weights = eval_weights;
      eval.weights_flow = eval_wflow;
      eval.manifest_flow = eval_mflow;
      eval.out = eval_out;
      if (*o_fuse) eval.fuse = eval_fuse;
      if (*o_k) eval.k = eval_k;
      if (*o_crops) eval.crops = crop_arg(eval_crops);
      if (*o_crop_size) eval.crop_size = eval_crop_size;
      if (*o_eval_seed) eval.seed = eval_seed;
      const EvalOutcome r = run_eval(eval);
      if (eval_out.empty()) {
        for (std::size_t i = 0; i < r.predictions.size(); ++i) {
          std::cout << prediction_line(r.video_dirs[i], r.labels[i], r.predictions[i]) << '\n';
        }
      }
      std::printf("top1 %.6f (%zu videos)\n", r.top1, r.predictions.size());
    } else if (c_inflate->parsed()) {
      inflate.weights2d = inf_w;
      inflate.temporal_sizes = inf_t;
      inflate.out_dir = inf_out;
      run_inflate(inflate);
    } else if (c_bench->parsed()) {
      bench.spec = bench_spec;
      bench.crops = crop_list(bench_crops);
      bench.out = bench_out;
      const BenchMemOutcome b = run_bench_mem(bench);
      std::cout << b.table;
      for (std::size_t i = 0; i < b.measured.size(); ++i) {
        std::printf("measured %-9s %llu bytes\n", std::string(to_string(b.reports[i].protocol.strategy)).c_str(),
                    static_cast<unsigned long long>(b.measured[i]));
      }
      if (bench_out.empty()) {
        for (const MemoryReport& r : b.reports) {
          std::cout << r.to_json().dump() << '\n';
        }
      }
    } else if (c_synth->parsed()) {
      synth.out_dir = synth_out;
      std::cout << run_synth(synth).string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
