#include "savo/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>

#include "savo/errors.hpp"

namespace savo::img {

Tensor load_rgb(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw_io("cannot decode image: " + path);

  Tensor out({3, bgr.rows, bgr.cols});
  for (int y = 0; y < bgr.rows; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out.at3(0, y, x) = double(row[x][2]);
      out.at3(1, y, x) = double(row[x][1]);
      out.at3(2, y, x) = double(row[x][0]);
    }
  }
  return out;
}

void save_rgb_png(const std::string& path, const Tensor& rgb) {
  if (rgb.ndim() != 3 || rgb.dim(0) != 3)
    throw_invalid("expected an RGB tensor (3, H, W)");
  const int h = int(rgb.dim(1)), w = int(rgb.dim(2));
  cv::Mat bgr(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb.at3(c, y, x), 0.0, 255.0);
        row[x][2 - c] = uchar(std::lround(v));
      }
    }
  }
  if (!cv::imwrite(path, bgr)) throw_io("cannot write image: " + path);
}

Tensor load_label_map(const std::string& path) {
  cv::Mat raw = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw_io("cannot decode label map: " + path);
  if (raw.channels() != 1)
    throw_invalid("label map must be single-channel: " + path);

  Tensor out({raw.rows, raw.cols});
  for (int y = 0; y < raw.rows; ++y)
    for (int x = 0; x < raw.cols; ++x)
      out[int64_t(y) * raw.cols + x] = double(raw.at<uchar>(y, x));
  return out;
}

Tensor bilinear_resize(const Tensor& x, int64_t out_h, int64_t out_w) {
  if (x.ndim() != 3) throw_invalid("resize expects a (C, H, W) tensor");
  if (out_h < 1 || out_w < 1) throw_invalid("resize target must be positive");
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);

  Tensor out({c, out_h, out_w});
  const double sy = double(h) / double(out_h);
  const double sx = double(w) / double(out_w);
  for (int64_t oy = 0; oy < out_h; ++oy) {
    const double fy = (double(oy) + 0.5) * sy - 0.5;
    const int64_t y0 = std::clamp<int64_t>(int64_t(std::floor(fy)), 0, h - 1);
    const int64_t y1 = std::min<int64_t>(y0 + 1, h - 1);
    const double wy = std::clamp(fy - std::floor(fy), 0.0, 1.0);
    const double ty = (fy < 0.0) ? 0.0 : (fy > double(h - 1) ? 0.0 : wy);
    for (int64_t ox = 0; ox < out_w; ++ox) {
      const double fx = (double(ox) + 0.5) * sx - 0.5;
      const int64_t x0 =
          std::clamp<int64_t>(int64_t(std::floor(fx)), 0, w - 1);
      const int64_t x1 = std::min<int64_t>(x0 + 1, w - 1);
      const double wx = std::clamp(fx - std::floor(fx), 0.0, 1.0);
      const double tx = (fx < 0.0) ? 0.0 : (fx > double(w - 1) ? 0.0 : wx);
      for (int64_t ch = 0; ch < c; ++ch) {
        const double top =
            x.at3(ch, y0, x0) * (1.0 - tx) + x.at3(ch, y0, x1) * tx;
        const double bot =
            x.at3(ch, y1, x0) * (1.0 - tx) + x.at3(ch, y1, x1) * tx;
        out.at3(ch, oy, ox) = top * (1.0 - ty) + bot * ty;
      }
    }
  }
  return out;
}

Tensor preprocess(const Tensor& rgb, int64_t out_h, int64_t out_w) {
  Tensor out = (rgb.dim(1) == out_h && rgb.dim(2) == out_w)
                   ? rgb
                   : bilinear_resize(rgb, out_h, out_w);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] / 255.0 - 0.5;
  return out;
}

}  // namespace savo::img
