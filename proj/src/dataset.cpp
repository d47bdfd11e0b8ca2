#include "savo/dataset.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "savo/errors.hpp"
#include "savo/image.hpp"

namespace fs = std::filesystem;

namespace savo::data {

void SplitConfig::validate() const {
  if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
    throw_config("validation_fraction must lie strictly between 0 and 1");
  if (window_min < 2)
    throw_config("window_min must be at least 2 frames");
  if (window_max < window_min)
    throw_config("window_max must be >= window_min");
  for (const std::string& id : train_ids)
    if (std::find(test_ids.begin(), test_ids.end(), id) != test_ids.end())
      throw_config("sequence " + id + " appears in both train and test sets");
}

namespace {

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d r = u * v.transpose();
  if (r.determinant() < 0.0) {
    u.col(2) *= -1.0;
    r = u * v.transpose();
  }
  return r;
}

}  // namespace

std::vector<se3::Pose> parse_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open pose file: " + path);

  std::vector<se3::Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

    std::istringstream ls(line);
    double vals[12];
    int count = 0;
    double v;
    while (ls >> v) {
      if (count < 12) vals[count] = v;
      ++count;
    }
    if (count != 12)
      throw_parse(path + ":" + std::to_string(line_no) + ": expected 12 pose "
                  "values, got " + std::to_string(count));

    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = vals[r * 4 + c];
    if (!m.allFinite())
      throw_parse(path + ":" + std::to_string(line_no) +
                  ": non-finite pose value");

    Eigen::Matrix3d rot = m.topLeftCorner<3, 3>();
    const double dev =
        (rot.transpose() * rot - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff();
    if (rot.determinant() < 0.0)
      throw_parse(path + ":" + std::to_string(line_no) +
                  ": rotation block is a reflection");
    if (dev > 1e-6) {
      if (dev > 1e-3)
        std::fprintf(stderr,
                     "warning: %s:%d rotation off orthonormal by %.3g, "
                     "projecting\n",
                     path.c_str(), line_no, dev);
      m.topLeftCorner<3, 3>() = nearest_rotation(rot);
    }
    se3::Pose pose(m);
    se3::validate(pose);
    poses.push_back(pose);
  }
  return poses;
}

std::string serialize_pose_line(const se3::Pose& pose) {
  char buf[32];
  std::string out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", pose.matrix(r, c));
      if (!out.empty()) out += ' ';
      out += buf;
    }
  }
  return out;
}

void write_pose_file(const std::string& path,
                     const std::vector<se3::Pose>& poses) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write pose file: " + path);
  for (const se3::Pose& p : poses) out << serialize_pose_line(p) << '\n';
  if (!out) throw_io("write failed: " + path);
}

SequenceRecord load_sequence(const std::string& root, const std::string& id) {
  SequenceRecord rec;
  rec.sequence_id = id;

  const fs::path image_dir = fs::path(root) / "sequences" / id / "image_2";
  if (!fs::is_directory(image_dir))
    throw_io("missing image directory: " + image_dir.string());
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (entry.path().extension() == ".png")
      rec.image_paths.push_back(entry.path().string());
  }
  std::sort(rec.image_paths.begin(), rec.image_paths.end());
  if (rec.image_paths.empty())
    throw_io("no frames found under: " + image_dir.string());

  const fs::path pose_file = fs::path(root) / "poses" / (id + ".txt");
  rec.global_poses = parse_pose_file(pose_file.string());
  if (rec.global_poses.size() != rec.image_paths.size())
    throw_parse("sequence " + id + ": " +
                std::to_string(rec.image_paths.size()) + " frames but " +
                std::to_string(rec.global_poses.size()) + " poses");
  return rec;
}

se3::Twist relative_twist(const SequenceRecord& record, int64_t i) {
  if (i < 0 || i + 1 >= record.length())
    throw_invalid("frame pair index out of range");
  return se3::log_map(se3::relative(record.global_poses[size_t(i)],
                                    record.global_poses[size_t(i) + 1]));
}

std::vector<WindowSpec> sample_windows(
    const std::vector<SequenceRecord>& records, const SplitConfig& cfg,
    int64_t count) {
  cfg.validate();
  if (records.empty()) throw_invalid("no sequences to sample from");
  for (const SequenceRecord& r : records)
    if (r.length() <= cfg.window_max)
      throw_invalid("sequence " + r.sequence_id +
                    " is shorter than the maximum window length");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<size_t> pick_record(0, records.size() - 1);
  std::uniform_int_distribution<int64_t> pick_length(cfg.window_min,
                                                     cfg.window_max);

  std::vector<WindowSpec> windows;
  windows.reserve(size_t(count));
  for (int64_t i = 0; i < count; ++i) {
    WindowSpec spec;
    spec.record_index = pick_record(rng);
    const SequenceRecord& rec = records[spec.record_index];
    spec.sequence_id = rec.sequence_id;
    spec.length = pick_length(rng);
    std::uniform_int_distribution<int64_t> pick_start(
        0, rec.length() - spec.length);
    spec.start = pick_start(rng);
    windows.push_back(spec);
  }
  return windows;
}

FrameWindow materialize_window(const std::vector<SequenceRecord>& records,
                               const WindowSpec& spec, int64_t out_h,
                               int64_t out_w) {
  if (spec.record_index >= records.size())
    throw_invalid("window references an unknown sequence record");
  const SequenceRecord& rec = records[spec.record_index];
  if (spec.start < 0 || spec.length < 2 ||
      spec.start + spec.length > rec.length())
    throw_invalid("window range outside sequence " + rec.sequence_id);

  FrameWindow window;
  window.sequence_id = spec.sequence_id;
  window.start_index = spec.start;
  for (int64_t i = 0; i < spec.length; ++i) {
    Tensor rgb = img::load_rgb(rec.image_paths[size_t(spec.start + i)]);
    window.frames.push_back(img::preprocess(rgb, out_h, out_w));
  }
  for (int64_t i = 0; i + 1 < spec.length; ++i)
    window.relative_twists.push_back(relative_twist(rec, spec.start + i));
  return window;
}

std::pair<std::vector<WindowSpec>, std::vector<WindowSpec>> split_validation(
    const std::vector<WindowSpec>& windows, const SplitConfig& cfg) {
  if (windows.empty()) throw_invalid("cannot split an empty window pool");
  const int64_t n = int64_t(windows.size());
  const int64_t val_count =
      int64_t(std::floor(cfg.validation_fraction * double(n) + 0.5));

  std::vector<size_t> order(windows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(cfg.seed ^ 0x5e3d5a17c0ffee11ull);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> is_val(windows.size(), false);
  for (int64_t i = 0; i < val_count; ++i) is_val[order[size_t(i)]] = true;

  std::pair<std::vector<WindowSpec>, std::vector<WindowSpec>> out;
  for (size_t i = 0; i < windows.size(); ++i)
    (is_val[i] ? out.second : out.first).push_back(windows[i]);
  return out;
}

}  // namespace savo::data
