#include "edgetsn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "edgetsn/binary_io.hpp"
#include "edgetsn/error.hpp"

namespace edgetsn {

namespace {

// Reads the next header integer, skipping whitespace and '#' comments.
std::size_t header_int(std::istream& is, const std::filesystem::path& path) {
  int c = is.get();
  while (is) {
    if (c == '#') {
      while (is && c != '\n') {
        c = is.get();
      }
    } else if (std::isspace(c)) {
      c = is.get();
    } else {
      break;
    }
  }
  if (!is || !std::isdigit(c)) {
    throw DataError("bad PNM header in " + path.string());
  }
  std::size_t v = 0;
  while (is && std::isdigit(c)) {
    v = v * 10 + static_cast<std::size_t>(c - '0');
    if (v > (1u << 24)) {
      throw DataError("PNM header value too large in " + path.string());
    }
    c = is.get();
  }
  if (!std::isspace(c)) {
    throw DataError("bad PNM header in " + path.string());
  }
  return v;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot open " + path.string());
  }
  char magic[2] = {};
  is.read(magic, 2);
  if (!is || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw DataError(path.string() + " is not a binary PPM/PGM file");
  }
  const std::size_t C = magic[1] == '6' ? 3 : 1;
  const std::size_t W = header_int(is, path);
  const std::size_t H = header_int(is, path);
  const std::size_t maxval = header_int(is, path);
  if (W == 0 || H == 0 || maxval == 0 || maxval > 65535) {
    throw DataError("bad PNM dimensions or maxval in " + path.string());
  }
  const std::size_t bps = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(W * H * C * bps);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw DataError("truncated pixel data in " + path.string());
  }
  Tensor out({C, H, W});
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t p = 0; p < H * W; ++p) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = (p * C + c) * bps;
      const std::size_t v = bps == 2 ? (std::size_t{raw[i]} << 8) | raw[i + 1] : raw[i];
      if (v > maxval) {
        throw DataError("sample exceeds maxval in " + path.string());
      }
      out[c * H * W + p] = static_cast<double>(v) * scale;
    }
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, const Tensor& frame) {
  if (frame.rank() != 3 || (frame.dim(0) != 1 && frame.dim(0) != 3)) {
    throw ShapeError("write_pnm expects 1 x H x W or 3 x H x W, got " + shape_to_string(frame.shape()));
  }
  const std::size_t C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  std::vector<unsigned char> raw(C * H * W);
  for (std::size_t p = 0; p < H * W; ++p) {
    for (std::size_t c = 0; c < C; ++c) {
      raw[p * C + c] = quantize(frame[c * H * W + p]);
    }
  }
  std::ofstream os(path, std::ios::binary);
  os << (C == 3 ? "P6" : "P5") << '\n' << W << ' ' << H << "\n255\n";
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
}

Tensor RawVideo::frame(std::size_t t) const {
  if (t >= frames) {
    throw ContractError("frame " + std::to_string(t) + " outside video of " + std::to_string(frames));
  }
  const std::size_t n = std::size_t{channels} * height * width;
  Tensor out({channels, height, width});
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<double>(bytes[t * n + i]) / 255.0;
  }
  return out;
}

RawVideo read_raw_video(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot open " + path.string());
  }
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "EDGV") {
    throw DataError(path.string() + " is not an EDGV video");
  }
  RawVideo v;
  try {
    v.frames = detail::get_le<std::uint32_t>(is);
    v.channels = detail::get_le<std::uint32_t>(is);
    v.height = detail::get_le<std::uint32_t>(is);
    v.width = detail::get_le<std::uint32_t>(is);
    v.fps = detail::get_le<float>(is);
  } catch (const DataError&) {
    throw DataError("truncated EDGV header in " + path.string());
  }
  if (v.frames == 0 || v.height == 0 || v.width == 0 || (v.channels != 1 && v.channels != 3)) {
    throw DataError("bad EDGV dimensions in " + path.string());
  }
  if (!(v.fps > 0.0f) || !std::isfinite(v.fps)) {
    throw DataError("bad EDGV frame rate in " + path.string());
  }
  const std::uint64_t n = std::uint64_t{v.frames} * v.channels * v.height * v.width;
  if (n > (std::uint64_t{1} << 34)) {
    throw DataError("EDGV video too large: " + path.string());
  }
  v.bytes.resize(n);
  is.read(reinterpret_cast<char*>(v.bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::uint64_t>(is.gcount()) != n) {
    const std::uint64_t frame_bytes = std::uint64_t{v.channels} * v.height * v.width;
    throw DataError("truncated EDGV payload in " + path.string() + " at frame " +
                    std::to_string(static_cast<std::uint64_t>(is.gcount()) / frame_bytes));
  }
  return v;
}

void write_raw_video(const std::filesystem::path& path, const RawVideo& v) {
  const std::uint64_t n = std::uint64_t{v.frames} * v.channels * v.height * v.width;
  if (v.bytes.size() != n) {
    throw ContractError("EDGV payload size does not match its header");
  }
  std::ofstream os(path, std::ios::binary);
  os.write("EDGV", 4);
  detail::put_le(os, v.frames);
  detail::put_le(os, v.channels);
  detail::put_le(os, v.height);
  detail::put_le(os, v.width);
  detail::put_le(os, v.fps);
  os.write(reinterpret_cast<const char*>(v.bytes.data()), static_cast<std::streamsize>(n));
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
}

RawVideo to_raw_video(const std::vector<Tensor>& frames, float fps) {
  if (frames.empty()) {
    throw ContractError("video needs at least one frame");
  }
  const Shape& s = frames.front().shape();
  if (s.size() != 3) {
    throw ShapeError("frames must be C x H x W");
  }
  RawVideo v;
  v.frames = static_cast<std::uint32_t>(frames.size());
  v.channels = static_cast<std::uint32_t>(s[0]);
  v.height = static_cast<std::uint32_t>(s[1]);
  v.width = static_cast<std::uint32_t>(s[2]);
  v.fps = fps;
  v.bytes.reserve(frames.size() * frames.front().size());
  for (const Tensor& f : frames) {
    if (f.shape() != s) {
      throw ShapeError("frames of one video must share a shape");
    }
    for (const double x : f.data()) {
      v.bytes.push_back(quantize(x));
    }
  }
  return v;
}

}  // namespace edgetsn
