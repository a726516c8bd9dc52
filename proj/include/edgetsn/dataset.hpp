#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "edgetsn/modality.hpp"
#include "edgetsn/sampling.hpp"
#include "edgetsn/tensor.hpp"

namespace edgetsn {

// One line of a JSON-lines dataset manifest. video_dir is stored as written;
// relative paths resolve against the manifest's directory.
struct ManifestRecord {
  std::string video_dir;
  std::size_t label = 0;
  std::string class_name;
  std::size_t frame_count = 0;
  Modality modality = Modality::rgb;
  double fps = 25.0;
  // Flow datasets only: extraction parameters, 0 when absent.
  std::size_t flow_window = 0;
  double flow_vmax = 0.0;

  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  // Directory that relative video_dir entries resolve against.
  std::filesystem::path root;

  std::size_t num_classes() const noexcept;
  std::filesystem::path video_path(const ManifestRecord& r) const;
  // Throws DataError if a label maps to two class names or the other way
  // round, or a record is malformed.
  void validate() const;
};

std::string manifest_line(const ManifestRecord& r);
ManifestRecord parse_manifest_line(const std::string& line);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
void append_manifest(const std::filesystem::path& path, const ManifestRecord& record);

// frame_%06d.ppm (rgb) or frame_%06d.ten (flow, stored losslessly).
std::string frame_file_name(std::size_t index, Modality modality);

// Writes every frame of the clip into `dir`, replacing older frame files.
void save_clip(const std::filesystem::path& dir, const VideoClip& clip);
// Reads frame_000000 .. frame_{T-1} in .ppm, .pgm or .ten form. Single
// channel frames are replicated to three channels for rgb clips.
VideoClip load_clip_dir(const std::filesystem::path& dir, Modality modality, double fps = 25.0);
// As above, also checking the record's frame count.
VideoClip load_clip(const DatasetManifest& manifest, const ManifestRecord& record);

struct IngestOptions {
  double target_fps = 25.0;
  // Frame rate of a frame directory; EDGV files carry their own.
  double source_fps = 25.0;
  std::size_t label = 0;
  std::string class_name;
};

// Nearest-index frame selection from `source_fps` to `target_fps`.
std::vector<std::size_t> resample_indices(std::size_t frame_count, double source_fps, double target_fps);

// Reads a directory of PPM/PGM frames or an EDGV file, resamples, scales to
// [0, 1] and writes frame_%06d.ppm files into `out_dir`.
ManifestRecord ingest(const std::filesystem::path& input, const std::filesystem::path& out_dir,
                      const IngestOptions& options);

// Runs fn(i) for i in [0, n) over the available hardware threads. The first
// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Extracts normalised flow for every rgb video of `manifest` into
// out_dir/<index>_<class>/ and returns the flow manifest (root = out_dir).
DatasetManifest extract_flow_dataset(const DatasetManifest& manifest, const std::filesystem::path& out_dir,
                                     std::size_t window_radius, double vmax);

// Fraction of predictions whose argmax (lowest index on ties) equals the label.
double top1_accuracy(std::span<const Tensor> predictions, std::span<const std::size_t> labels);

}  // namespace edgetsn
