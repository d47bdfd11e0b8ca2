#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "savo/se3.hpp"
#include "savo/tensor.hpp"

namespace savo::data {

/// One odometry sequence: ordered frame image paths plus the camera-to-world
/// ground-truth pose of every frame.
struct SequenceRecord {
  std::string sequence_id;
  std::vector<std::string> image_paths;
  std::vector<se3::Pose> global_poses;

  int64_t length() const { return int64_t(image_paths.size()); }
};

/// Lightweight handle of a sampled training window; frames are materialized
/// on demand so a large window pool stays cheap to hold.
struct WindowSpec {
  std::string sequence_id;
  size_t record_index = 0;
  int64_t start = 0;
  int64_t length = 0;  // frame count, twists = length - 1
};

/// A materialized window: N+1 preprocessed frames and the N ground-truth
/// relative twists between consecutive frames.
struct FrameWindow {
  std::string sequence_id;
  int64_t start_index = 0;
  std::vector<Tensor> frames;
  std::vector<se3::Twist> relative_twists;
};

struct SplitConfig {
  std::vector<std::string> train_ids = {"00", "01", "02", "08", "09"};
  std::vector<std::string> test_ids = {"03", "04", "05", "06", "07", "10"};
  double validation_fraction = 0.05;
  int64_t window_min = 5;
  int64_t window_max = 10;
  uint64_t seed = 0;

  void validate() const;
};

/// Parses a KITTI ground-truth pose file: one 12-token row-major 3x4 matrix
/// per line. Rotations off orthonormal beyond 1e-6 are projected to the
/// nearest rotation; beyond 1e-3 a warning naming the line is printed first.
std::vector<se3::Pose> parse_pose_file(const std::string& path);

/// 12-token row-major serialization of the upper 3x4 block.
std::string serialize_pose_line(const se3::Pose& pose);
void write_pose_file(const std::string& path,
                     const std::vector<se3::Pose>& poses);

/// Loads one sequence from a KITTI-layout root:
/// sequences/<id>/image_2/*.png (sorted) and poses/<id>.txt.
SequenceRecord load_sequence(const std::string& root, const std::string& id);

/// Ground-truth twist between consecutive frames i and i+1.
se3::Twist relative_twist(const SequenceRecord& record, int64_t i);

/// Draws `count` windows with uniformly random start and length inside
/// [cfg.window_min, cfg.window_max]. Deterministic under cfg.seed.
std::vector<WindowSpec> sample_windows(
    const std::vector<SequenceRecord>& records, const SplitConfig& cfg,
    int64_t count);

/// Decodes and preprocesses the frames of one window to (3, out_h, out_w)
/// and computes its relative twists.
FrameWindow materialize_window(const std::vector<SequenceRecord>& records,
                               const WindowSpec& spec, int64_t out_h,
                               int64_t out_w);

/// Seeded partition into (train, validation); the validation share is
/// round-half-up of validation_fraction * count.
std::pair<std::vector<WindowSpec>, std::vector<WindowSpec>> split_validation(
    const std::vector<WindowSpec>& windows, const SplitConfig& cfg);

}  // namespace savo::data
