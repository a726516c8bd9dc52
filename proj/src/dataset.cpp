#include "edgetsn/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "edgetsn/error.hpp"
#include "edgetsn/flow.hpp"
#include "edgetsn/image_io.hpp"
#include "edgetsn/tensor_io.hpp"
#include "edgetsn/tsn.hpp"

namespace edgetsn {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::size_t DatasetManifest::num_classes() const noexcept {
  std::size_t c = 0;
  for (const ManifestRecord& r : records) {
    c = std::max(c, r.label + 1);
  }
  return c;
}

fs::path DatasetManifest::video_path(const ManifestRecord& r) const {
  const fs::path p(r.video_dir);
  return p.is_absolute() ? p : root / p;
}

void DatasetManifest::validate() const {
  std::map<std::size_t, std::string> names;
  std::map<std::string, std::size_t> labels;
  for (const ManifestRecord& r : records) {
    if (r.frame_count == 0) {
      throw DataError("manifest record '" + r.video_dir + "' has no frames");
    }
    const auto [n, fresh_name] = names.emplace(r.label, r.class_name);
    const auto [l, fresh_label] = labels.emplace(r.class_name, r.label);
    if ((!fresh_name && n->second != r.class_name) || (!fresh_label && l->second != r.label)) {
      throw DataError("inconsistent class mapping at '" + r.video_dir + "': label " + std::to_string(r.label) +
                      " / class '" + r.class_name + "'");
    }
  }
}

std::string manifest_line(const ManifestRecord& r) {
  ordered_json j;
  j["video_dir"] = r.video_dir;
  j["label"] = r.label;
  j["class_name"] = r.class_name;
  j["frame_count"] = r.frame_count;
  j["modality"] = std::string(to_string(r.modality));
  j["fps"] = r.fps;
  if (r.modality == Modality::flow) {
    j["flow_window"] = r.flow_window;
    j["flow_vmax"] = r.flow_vmax;
  }
  return j.dump();
}

ManifestRecord parse_manifest_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    ManifestRecord r;
    r.video_dir = j.at("video_dir").get<std::string>();
    r.label = j.at("label").get<std::size_t>();
    r.class_name = j.at("class_name").get<std::string>();
    r.frame_count = j.at("frame_count").get<std::size_t>();
    r.modality = parse_modality(j.at("modality").get<std::string>());
    r.fps = j.at("fps").get<double>();
    r.flow_window = j.value("flow_window", std::size_t{0});
    r.flow_vmax = j.value("flow_vmax", 0.0);
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest line: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("malformed manifest line: ") + e.what());
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw DataError("cannot open manifest " + path.string());
  }
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    try {
      m.records.push_back(parse_manifest_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  m.validate();
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  for (const ManifestRecord& r : manifest.records) {
    os << manifest_line(r) << '\n';
  }
  if (!os) {
    throw DataError("cannot write manifest " + path.string());
  }
}

void append_manifest(const fs::path& path, const ManifestRecord& record) {
  if (fs::exists(path)) {
    DatasetManifest existing = read_manifest(path);
    existing.records.push_back(record);
    existing.validate();
  }
  std::ofstream os(path, std::ios::binary | std::ios::app);
  os << manifest_line(record) << '\n';
  if (!os) {
    throw DataError("cannot append to manifest " + path.string());
  }
}

std::string frame_file_name(std::size_t index, Modality modality) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.%s", index, modality == Modality::flow ? "ten" : "ppm");
  return buf;
}

void save_clip(const fs::path& dir, const VideoClip& clip) {
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename().string().starts_with("frame_")) {
      fs::remove(entry.path());
    }
  }
  for (std::size_t t = 0; t < clip.frame_count(); ++t) {
    const fs::path p = dir / frame_file_name(t, clip.modality);
    if (clip.modality == Modality::flow) {
      save_tensor(p, clip.frames[t]);
    } else {
      write_pnm(p, clip.frames[t]);
    }
  }
}

namespace {

Tensor read_frame_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".ten") {
    return load_tensor(p);
  }
  return read_pnm(p);
}

Tensor to_three_channels(Tensor f) {
  if (f.rank() == 3 && f.dim(0) == 1) {
    Tensor out({3, f.dim(1), f.dim(2)});
    for (std::size_t c = 0; c < 3; ++c) {
      std::copy_n(f.ptr(), f.size(), out.ptr() + c * f.size());
    }
    return out;
  }
  return f;
}

}  // namespace

VideoClip load_clip_dir(const fs::path& dir, Modality modality, double fps) {
  if (!fs::is_directory(dir)) {
    throw DataError("video directory " + dir.string() + " does not exist");
  }
  std::map<std::size_t, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string ext = entry.path().extension().string();
    if (!name.starts_with("frame_") || (ext != ".ppm" && ext != ".pgm" && ext != ".ten")) {
      continue;
    }
    const std::string digits = entry.path().stem().string().substr(6);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      continue;
    }
    const std::size_t index = std::stoul(digits);
    if (!files.emplace(index, entry.path()).second) {
      throw DataError("two files for frame " + std::to_string(index) + " in " + dir.string());
    }
  }
  if (files.empty()) {
    throw DataError("no frames in " + dir.string());
  }
  if (files.rbegin()->first != files.size() - 1) {
    throw DataError("frame numbering in " + dir.string() + " has gaps");
  }
  VideoClip clip;
  clip.modality = modality;
  clip.fps = fps;
  clip.source_id = dir.string();
  for (const auto& [index, path] : files) {
    try {
      Tensor f = read_frame_file(path);
      clip.frames.push_back(modality == Modality::rgb ? to_three_channels(std::move(f)) : std::move(f));
    } catch (const DataError& e) {
      throw DataError("frame " + path.filename().string() + ": " + e.what());
    }
  }
  try {
    clip.validate();
  } catch (const ContractError& e) {
    throw DataError(dir.string() + ": " + e.what());
  }
  return clip;
}

VideoClip load_clip(const DatasetManifest& manifest, const ManifestRecord& record) {
  VideoClip clip = load_clip_dir(manifest.video_path(record), record.modality, record.fps);
  if (clip.frame_count() != record.frame_count) {
    throw DataError(record.video_dir + " holds " + std::to_string(clip.frame_count()) + " frames, manifest says " +
                    std::to_string(record.frame_count));
  }
  return clip;
}

std::vector<std::size_t> resample_indices(std::size_t frame_count, double source_fps, double target_fps) {
  if (!(source_fps > 0.0) || !(target_fps > 0.0)) {
    throw ContractError("frame rates must be positive");
  }
  if (frame_count == 0) {
    return {};
  }
  const double step = source_fps / target_fps;
  const auto n = static_cast<std::size_t>(
      std::max(1.0, std::floor(static_cast<double>(frame_count) * target_fps / source_fps + 1e-9)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = std::min(frame_count - 1, static_cast<std::size_t>(std::llround(static_cast<double>(i) * step)));
  }
  return idx;
}

ManifestRecord ingest(const fs::path& input, const fs::path& out_dir, const IngestOptions& options) {
  std::vector<Tensor> frames;
  double source_fps = options.source_fps;
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
      const std::string ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw DataError("no .ppm or .pgm frames in " + input.string());
    }
    for (const fs::path& p : files) {
      try {
        frames.push_back(to_three_channels(read_pnm(p)));
      } catch (const DataError& e) {
        throw DataError("cannot ingest frame " + p.filename().string() + ": " + e.what());
      }
      if (frames.back().shape() != frames.front().shape()) {
        throw DataError("frame " + p.filename().string() + " differs in size from the first frame");
      }
    }
  } else {
    const RawVideo v = read_raw_video(input);
    source_fps = v.fps;
    for (std::size_t t = 0; t < v.frames; ++t) {
      frames.push_back(to_three_channels(v.frame(t)));
    }
  }

  VideoClip clip;
  clip.fps = options.target_fps;
  for (const std::size_t i : resample_indices(frames.size(), source_fps, options.target_fps)) {
    clip.frames.push_back(frames[i]);
  }
  save_clip(out_dir, clip);

  ManifestRecord r;
  r.video_dir = out_dir.string();
  r.label = options.label;
  r.class_name = options.class_name;
  r.frame_count = clip.frame_count();
  r.modality = Modality::rgb;
  r.fps = options.target_fps;
  return r;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) {
              failure = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

DatasetManifest extract_flow_dataset(const DatasetManifest& manifest, const fs::path& out_dir,
                                     std::size_t window_radius, double vmax) {
  fs::create_directories(out_dir);
  DatasetManifest out;
  out.root = out_dir;
  out.records.resize(manifest.records.size());
  parallel_for(manifest.records.size(), [&](std::size_t i) {
    const ManifestRecord& r = manifest.records[i];
    if (r.modality != Modality::rgb) {
      throw DataError("flow extraction needs rgb videos, '" + r.video_dir + "' is " +
                      std::string(to_string(r.modality)));
    }
    const VideoClip flow = clip_to_flow(load_clip(manifest, r), window_radius, vmax);
    char name[32];
    std::snprintf(name, sizeof name, "%06zu", i);
    const std::string dir = std::string(name) + "_" + fs::path(r.video_dir).filename().string();
    save_clip(out_dir / dir, flow);
    ManifestRecord f = r;
    f.video_dir = dir;
    f.frame_count = flow.frame_count();
    f.modality = Modality::flow;
    f.flow_window = window_radius;
    f.flow_vmax = vmax;
    out.records[i] = std::move(f);
  });
  return out;
}

double top1_accuracy(std::span<const Tensor> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) {
    throw ContractError(std::to_string(predictions.size()) + " predictions for " + std::to_string(labels.size()) +
                        " labels");
  }
  if (predictions.empty()) {
    throw ContractError("top-1 accuracy of an empty set");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (argmax(predictions[i].data()) == labels[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace edgetsn
