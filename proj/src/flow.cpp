#include "edgetsn/flow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "edgetsn/error.hpp"

namespace edgetsn {

Tensor to_grayscale(const Tensor& frame) {
  if (frame.rank() != 3) {
    throw ShapeError("to_grayscale expects C x H x W, got " + shape_to_string(frame.shape()));
  }
  const std::size_t C = frame.dim(0);
  const std::size_t plane = frame.dim(1) * frame.dim(2);
  Tensor out({frame.dim(1), frame.dim(2)});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[i] += frame[c * plane + i];
    }
  }
  for (double& v : out.data()) {
    v /= static_cast<double>(C);
  }
  return out;
}

namespace {

// Summed-area table with a zero guard row/column: (H+1) x (W+1).
class Integral {
 public:
  Integral(const std::vector<double>& v, std::size_t H, std::size_t W) : W1_(W + 1), table_((H + 1) * (W + 1), 0.0) {
    for (std::size_t y = 0; y < H; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < W; ++x) {
        row += v[y * W + x];
        table_[(y + 1) * W1_ + x + 1] = table_[y * W1_ + x + 1] + row;
      }
    }
  }
  // Sum over rows [y0, y1) and columns [x0, x1).
  double box(std::size_t y0, std::size_t x0, std::size_t y1, std::size_t x1) const {
    return table_[y1 * W1_ + x1] - table_[y0 * W1_ + x1] - table_[y1 * W1_ + x0] + table_[y0 * W1_ + x0];
  }

 private:
  std::size_t W1_;
  std::vector<double> table_;
};

}  // namespace

FlowField lucas_kanade(const Tensor& frame_a, const Tensor& frame_b, std::size_t window_radius) {
  if (frame_a.rank() != 2 || frame_a.shape() != frame_b.shape()) {
    throw ShapeError("lucas_kanade expects two H x W frames of equal shape, got " +
                     shape_to_string(frame_a.shape()) + " and " + shape_to_string(frame_b.shape()));
  }
  if (window_radius < 1) {
    throw ContractError("window_radius must be >= 1");
  }
  const std::size_t H = frame_a.dim(0);
  const std::size_t W = frame_a.dim(1);
  const std::size_t n = H * W;

  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] = 0.5 * (frame_a[i] + frame_b[i]);
  }
  auto at = [&](std::size_t y, std::size_t x) { return mean[y * W + x]; };
  std::vector<double> ix(n, 0.0), iy(n, 0.0), it(n);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      if (W > 1) {
        if (x == 0) {
          ix[y * W + x] = at(y, 1) - at(y, 0);
        } else if (x == W - 1) {
          ix[y * W + x] = at(y, x) - at(y, x - 1);
        } else {
          ix[y * W + x] = 0.5 * (at(y, x + 1) - at(y, x - 1));
        }
      }
      if (H > 1) {
        if (y == 0) {
          iy[y * W + x] = at(1, x) - at(0, x);
        } else if (y == H - 1) {
          iy[y * W + x] = at(y, x) - at(y - 1, x);
        } else {
          iy[y * W + x] = 0.5 * (at(y + 1, x) - at(y - 1, x));
        }
      }
      it[y * W + x] = frame_b[y * W + x] - frame_a[y * W + x];
    }
  }

  std::vector<double> xx(n), xy(n), yy(n), xt(n), yt(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = ix[i] * ix[i];
    xy[i] = ix[i] * iy[i];
    yy[i] = iy[i] * iy[i];
    xt[i] = ix[i] * it[i];
    yt[i] = iy[i] * it[i];
  }
  const Integral sxx(xx, H, W), sxy(xy, H, W), syy(yy, H, W), sxt(xt, H, W), syt(yt, H, W);

  FlowField f{Tensor({H, W}), Tensor({H, W}), window_radius, 0.0};
  const std::size_t r = window_radius;
  for (std::size_t y = 0; y < H; ++y) {
    const std::size_t y0 = y >= r ? y - r : 0;
    const std::size_t y1 = std::min(H, y + r + 1);
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t x0 = x >= r ? x - r : 0;
      const std::size_t x1 = std::min(W, x + r + 1);
      const double a = sxx.box(y0, x0, y1, x1);
      const double b = sxy.box(y0, x0, y1, x1);
      const double d = syy.box(y0, x0, y1, x1);
      const double bx = -sxt.box(y0, x0, y1, x1);
      const double by = -syt.box(y0, x0, y1, x1);
      const double half_trace = 0.5 * (a + d);
      const double spread = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
      if (half_trace - spread < kSingularEigenvalue) {
        continue;
      }
      const double det = a * d - b * b;
      f.vx[y * W + x] = (d * bx - b * by) / det;
      f.vy[y * W + x] = (a * by - b * bx) / det;
    }
  }
  return f;
}

FlowField normalize_flow(const FlowField& field, double vmax) {
  if (!(vmax > 0.0)) {
    throw ContractError("vmax must be positive");
  }
  FlowField out = field;
  out.vmax = vmax;
  for (Tensor* t : {&out.vx, &out.vy}) {
    for (double& v : t->data()) {
      v = (std::clamp(v, -vmax, vmax) + vmax) / (2.0 * vmax);
    }
  }
  return out;
}

VideoClip clip_to_flow(const VideoClip& clip, std::size_t window_radius, double vmax) {
  if (clip.frame_count() < 2) {
    throw ContractError("flow needs a clip of at least 2 frames, '" + clip.source_id + "' has " +
                        std::to_string(clip.frame_count()));
  }
  if (clip.modality != Modality::rgb) {
    throw ContractError("flow is extracted from rgb clips");
  }
  VideoClip out;
  out.modality = Modality::flow;
  out.fps = clip.fps;
  out.source_id = clip.source_id;
  out.frames.reserve(clip.frame_count() - 1);
  Tensor prev = to_grayscale(clip.frames[0]);
  for (std::size_t t = 1; t < clip.frame_count(); ++t) {
    Tensor next = to_grayscale(clip.frames[t]);
    const FlowField f = normalize_flow(lucas_kanade(prev, next, window_radius), vmax);
    const std::size_t plane = f.vx.size();
    Tensor frame({2, f.vx.dim(0), f.vx.dim(1)});
    std::copy_n(f.vx.ptr(), plane, frame.ptr());
    std::copy_n(f.vy.ptr(), plane, frame.ptr() + plane);
    out.frames.push_back(std::move(frame));
    prev = std::move(next);
  }
  return out;
}

}  // namespace edgetsn
