// Generates the committed test fixture: three short synthetic sequences in
// KITTI odometry layout (sequences/<id>/image_2, poses/<id>.txt) plus
// per-frame category label maps (labels/<id>/<frame>.png, labels/vocab.txt).
//
// The scene is a deterministic point-sprite world (road dots, building and
// vegetation blobs, a few vehicles) rendered through a pinhole camera that
// follows an analytic trajectory, so images, labels, and ground-truth poses
// are exactly consistent.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <random>
#include <string>
#include <vector>

#include "savo/dataset.hpp"
#include "savo/se3.hpp"

namespace fs = std::filesystem;
using savo::se3::Pose;

namespace {

constexpr int kWidth = 416;
constexpr int kHeight = 128;
constexpr double kFx = 160.0, kFy = 160.0;
constexpr double kCx = kWidth / 2.0, kCy = kHeight / 2.0 - 10.0;
constexpr int kFrames = 20;

struct ScenePoint {
  Eigen::Vector3d position;
  double size = 0.0;       // world-space radius
  cv::Vec3b color;         // BGR
  int category = 0;
};

// camera-to-world poses; x right, y down, z forward
std::vector<Pose> make_trajectory(double speed, double yaw_rate_a,
                                  double yaw_rate_b) {
  std::vector<Pose> poses;
  Eigen::Vector3d position(0.0, 0.0, 0.0);
  double yaw = 0.0;
  for (int k = 0; k < kFrames; ++k) {
    Eigen::Matrix3d r;
    r << std::cos(yaw), 0.0, std::sin(yaw),
         0.0, 1.0, 0.0,
         -std::sin(yaw), 0.0, std::cos(yaw);
    poses.emplace_back(r, position);
    position += r * Eigen::Vector3d(0.0, 0.0, speed);
    yaw += (k < kFrames / 2) ? yaw_rate_a : yaw_rate_b;
  }
  return poses;
}

std::vector<ScenePoint> make_scene(const std::vector<Pose>& path,
                                   uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> pick_frame(0, kFrames - 1);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * u01(rng);
  };
  auto side = [&]() { return u01(rng) < 0.5 ? -1.0 : 1.0; };
  auto anchored = [&](const Eigen::Vector3d& offset) {
    const Pose& p = path[size_t(pick_frame(rng))];
    return Eigen::Vector3d(p.translation() + p.rotation() * offset);
  };

  std::vector<ScenePoint> scene;

  // road surface dots and lane markings (category 1)
  for (int i = 0; i < 450; ++i) {
    ScenePoint pt;
    const bool marking = u01(rng) < 0.2;
    const double lateral = marking ? uniform(-0.2, 0.2) : uniform(-3.0, 3.0);
    pt.position = anchored({lateral, 1.65, uniform(1.0, 40.0)});
    pt.size = marking ? 0.22 : uniform(0.25, 0.6);
    const int shade = marking ? 190 : int(uniform(52.0, 78.0));
    pt.color = cv::Vec3b(uchar(shade), uchar(shade), uchar(shade + 4));
    pt.category = 1;
    scene.push_back(pt);
  }

  // building blobs stacked at the roadside (category 2)
  for (int i = 0; i < 260; ++i) {
    ScenePoint pt;
    const double s = side();
    pt.position =
        anchored({s * uniform(5.5, 10.0), uniform(-4.5, 1.2), uniform(2.0, 45.0)});
    pt.size = uniform(0.8, 1.8);
    const int base = int(uniform(96.0, 150.0));
    pt.color = cv::Vec3b(uchar(base - 12), uchar(base), uchar(base + 14));
    pt.category = 2;
    scene.push_back(pt);
  }

  // vegetation clusters (category 3)
  for (int i = 0; i < 220; ++i) {
    ScenePoint pt;
    const double s = side();
    pt.position =
        anchored({s * uniform(3.2, 7.0), uniform(-2.2, 1.2), uniform(2.0, 40.0)});
    pt.size = uniform(0.5, 1.2);
    pt.color = cv::Vec3b(uchar(uniform(28.0, 58.0)),
                         uchar(uniform(96.0, 165.0)),
                         uchar(uniform(30.0, 62.0)));
    pt.category = 3;
    scene.push_back(pt);
  }

  // a handful of vehicles near the lane (category 4)
  for (int i = 0; i < 28; ++i) {
    ScenePoint pt;
    const double s = side();
    pt.position =
        anchored({s * uniform(1.6, 3.0), uniform(0.7, 1.3), uniform(4.0, 35.0)});
    pt.size = uniform(0.7, 1.1);
    pt.color = (u01(rng) < 0.5) ? cv::Vec3b(165, 60, 40)
                                : cv::Vec3b(40, 45, 170);
    pt.category = 4;
    scene.push_back(pt);
  }

  return scene;
}

void render_frame(const std::vector<ScenePoint>& scene, const Pose& cam,
                  cv::Mat& image, cv::Mat& labels) {
  image.create(kHeight, kWidth, CV_8UC3);
  labels = cv::Mat::zeros(kHeight, kWidth, CV_8UC1);

  // sky gradient, category 0
  for (int y = 0; y < kHeight; ++y) {
    const double t = double(y) / kHeight;
    const cv::Vec3b sky(uchar(196 - 36 * t), uchar(168 - 40 * t),
                        uchar(132 - 38 * t));
    image.row(y).setTo(sky);
  }

  const Eigen::Matrix3d r_wc = cam.rotation().transpose();
  const Eigen::Vector3d t = cam.translation();

  struct Splat {
    double z;
    cv::Point center;
    int radius;
    cv::Vec3b color;
    int category;
  };
  std::vector<Splat> splats;
  for (const ScenePoint& pt : scene) {
    const Eigen::Vector3d local = r_wc * (pt.position - t);
    if (local.z() < 0.8) continue;
    const double px = kFx * local.x() / local.z() + kCx;
    const double py = kFy * local.y() / local.z() + kCy;
    const int radius =
        std::clamp(int(std::lround(kFx * pt.size / local.z())), 1, 44);
    if (px < -radius || px > kWidth + radius || py < -radius ||
        py > kHeight + radius)
      continue;
    splats.push_back({local.z(),
                      cv::Point(int(std::lround(px)), int(std::lround(py))),
                      radius, pt.color, pt.category});
  }
  std::sort(splats.begin(), splats.end(),
            [](const Splat& a, const Splat& b) { return a.z > b.z; });
  for (const Splat& s : splats) {
    cv::circle(image, s.center, s.radius, cv::Scalar(s.color), cv::FILLED);
    cv::circle(labels, s.center, s.radius, cv::Scalar(s.category),
               cv::FILLED);
  }
}

void write_sequence(const fs::path& root, const std::string& id,
                    const std::vector<Pose>& poses, uint64_t scene_seed) {
  const fs::path image_dir = root / "sequences" / id / "image_2";
  const fs::path label_dir = root / "labels" / id;
  fs::create_directories(image_dir);
  fs::create_directories(label_dir);
  fs::create_directories(root / "poses");

  const std::vector<ScenePoint> scene = make_scene(poses, scene_seed);
  for (int k = 0; k < kFrames; ++k) {
    cv::Mat image, labels;
    render_frame(scene, poses[size_t(k)], image, labels);
    char name[16];
    std::snprintf(name, sizeof(name), "%06d.png", k);
    if (!cv::imwrite((image_dir / name).string(), image) ||
        !cv::imwrite((label_dir / name).string(), labels)) {
      std::fprintf(stderr, "failed to write frame %s/%s\n", id.c_str(), name);
      std::exit(1);
    }
  }
  savo::data::write_pose_file((root / "poses" / (id + ".txt")).string(),
                              poses);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? argv[1] : "data/fixture";
  fs::create_directories(root / "labels");

  write_sequence(root, "00", make_trajectory(6.0, 0.0, 0.0), 101);
  write_sequence(root, "01", make_trajectory(5.5, 0.03, 0.03), 202);
  write_sequence(root, "02", make_trajectory(5.0, 0.04, -0.04), 303);

  std::ofstream vocab(root / "labels" / "vocab.txt");
  vocab << "0\tbackground\n1\troad\n2\tbuilding\n3\tvegetation\n4\tvehicle\n";
  if (!vocab) {
    std::fprintf(stderr, "failed to write vocab.txt\n");
    return 1;
  }
  std::printf("fixture written to %s\n", root.string().c_str());
  return 0;
}
