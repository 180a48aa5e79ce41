#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>

#include <cstdio>
#include <filesystem>

#include "hexamp/priors.hpp"

using namespace hexamp;

namespace {

const RobotModel& model() {
  static const RobotModel m = default_model();
  return m;
}

int stance_count(const Eigen::VectorXd& frame) {
  int n = 0;
  for (int leg = 0; leg < kLegCount; ++leg) {
    const double world_z = frame[43 + leg * 3 + 2] + frame[42];
    if (world_z < kStanceHeightTol) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("zero command produces a standstill", "[priors]") {
  GaitParams p;
  p.command = {0.0, 0.0, 0.0};
  const Eigen::MatrixXd seg = generate_segment(model(), p, 2.0);
  const auto neutral = nominal_footholds(model());
  for (Eigen::Index k = 0; k < seg.cols(); ++k) {
    REQUIRE(seg.col(k).segment<18>(18).lpNorm<Eigen::Infinity>() < 1e-9);  // joint velocities
    REQUIRE(seg.col(k).segment<3>(36).norm() == 0.0);                      // base velocity
    for (int leg = 0; leg < kLegCount; ++leg) {
      const Eigen::Vector3d foot = seg.col(k).segment<3>(43 + leg * 3);
      REQUIRE((foot.head<2>() - neutral[leg].head<2>()).norm() < 1e-12);
      REQUIRE(foot.z() == Catch::Approx(-p.base_height).margin(1e-12));
    }
  }
}

TEST_CASE("forward segment covers the commanded distance", "[priors]") {
  GaitParams p;
  p.command = {0.3, 0.0, 0.0};
  Eigen::Vector2d pos;
  double yaw;
  gait::base_pose(p.command, 8.6, pos, yaw);
  REQUIRE(pos.x() == Catch::Approx(2.58).margin(1e-12));
  REQUIRE(pos.y() == 0.0);
  // every frame carries the constant body-frame command velocity
  const Eigen::MatrixXd seg = generate_segment(model(), p, 8.6);
  for (Eigen::Index k = 0; k < seg.cols(); ++k) {
    REQUIRE(seg(36, k) == Catch::Approx(0.3));
    REQUIRE(seg(41, k) == 0.0);
  }
}

TEST_CASE("every frame has exactly three stance feet in alternating tripods", "[priors]") {
  GaitParams p;
  for (const Eigen::Vector3d& cmd : default_command_list()) {
    p.command = cmd;
    const Eigen::MatrixXd seg = generate_segment(model(), p, 4.3);
    int flips = 0;
    int prev_set = -1;
    for (Eigen::Index k = 0; k < seg.cols(); ++k) {
      REQUIRE(stance_count(seg.col(k)) == 3);
      // which tripod is grounded
      const double lf_z = seg(43 + 2, k) + seg(42, k);
      const int set = lf_z < kStanceHeightTol ? 0 : 1;
      if (prev_set >= 0 && set != prev_set) ++flips;
      prev_set = set;
    }
    // 4.3 s at period 0.86 s: ten half-cycles, so nine or ten flips
    REQUIRE(flips >= 9);
    REQUIRE(flips <= 10);
  }
}

TEST_CASE("base-height entry is exact in every generated frame", "[priors]") {
  GaitParams p;
  p.command = {0.2, -0.1, 0.2};
  p.base_height = 0.30;
  const Eigen::MatrixXd seg = generate_segment(model(), p, 3.0);
  for (Eigen::Index k = 0; k < seg.cols(); ++k)
    REQUIRE(std::abs(seg(42, k) - 0.30) < 1e-9);
}

TEST_CASE("fk of generated joint angles reproduces the stored feet", "[priors]") {
  GaitParams p;
  p.command = {0.3, 0.1, 0.3};
  const Eigen::MatrixXd seg = generate_segment(model(), p, 3.0);
  double max_res = 0;
  for (Eigen::Index k = 0; k < seg.cols(); ++k) {
    for (int leg = 0; leg < kLegCount; ++leg) {
      const Eigen::Vector3d q = seg.col(k).segment<3>(leg * 3);
      const Eigen::Vector3d stored = seg.col(k).segment<3>(43 + leg * 3);
      max_res = std::max(max_res, (foot_position(model(), leg, q) - stored).norm());
    }
  }
  REQUIRE(max_res < 1e-6);
}

TEST_CASE("unreachable commands fault with leg and frame", "[priors]") {
  GaitParams p;
  p.command = {3.0, 0.0, 0.0};  // stride far beyond the leg workspace
  try {
    generate_segment(model(), p, 1.0);
    FAIL("expected GenerationFault");
  } catch (const GenerationFault& e) {
    const std::string what = e.what();
    REQUIRE(what.find("leg") != std::string::npos);
    REQUIRE(what.find("frame") != std::string::npos);
  }
}

TEST_CASE("dataset frame-count arithmetic and stats floor", "[priors]") {
  const PriorDataset ds = build_dataset(model(), GaitParams{}, default_command_list(), 8.6);
  REQUIRE(ds.segments.size() == 7);
  REQUIRE(ds.frame_count() == 7 * 431);  // 430 transitions plus the boundary frame
  REQUIRE(ds.pair_index().size() == 7 * 430);
  REQUIRE(ds.mean.size() == 61);
  for (int i = 0; i < 61; ++i) REQUIRE(ds.std[i] >= 1e-6);
  // the base-height dimension is constant, so its deviation hits the floor
  REQUIRE(ds.std[42] == 1e-6);
  REQUIRE_THROWS_AS(build_dataset(model(), GaitParams{}, {}, 8.6), std::invalid_argument);
}

TEST_CASE("dataset file round-trip is bit exact", "[priors]") {
  const PriorDataset ds = build_dataset(model(), GaitParams{}, default_command_list(), 2.0);
  const std::string path =
      (std::filesystem::temp_directory_path() / "hexamp_priors_rt.ampd").string();
  save_dataset(ds, path);
  const PriorDataset back = load_dataset(path);
  REQUIRE(back.frame_count() == ds.frame_count());
  REQUIRE(back.frames == ds.frames);
  REQUIRE(back.mean == ds.mean);
  REQUIRE(back.std == ds.std);
  REQUIRE(back.segments.size() == ds.segments.size());
  for (std::size_t i = 0; i < ds.segments.size(); ++i) {
    REQUIRE(back.segments[i].start == ds.segments[i].start);
    REQUIRE(back.segments[i].frames == ds.segments[i].frames);
    REQUIRE(back.segments[i].command == ds.segments[i].command);
  }
  std::remove(path.c_str());
}

TEST_CASE("sampled pairs are consecutive frames inside one segment", "[priors]") {
  GaitParams p;
  const PriorDataset ds =
      build_dataset(model(), p, {{0.3, 0, 0}, {0, 0.2, 0}}, 1.0);  // 2 x 51 frames
  Rng rng(17);
  const Eigen::MatrixXd pairs = sample_real_pairs(ds, 64, rng);
  REQUIRE(pairs.cols() == 64);
  for (int b = 0; b < 64; ++b) {
    // locate the first half among the stored frames
    const Eigen::VectorXd first =
        pairs.col(b).head(kAmpDim).cwiseProduct(ds.std) + ds.mean;
    int found = -1;
    for (Eigen::Index i = 0; i < ds.frame_count(); ++i)
      if ((ds.frames.col(i).cast<double>() - first).lpNorm<Eigen::Infinity>() < 1e-9) {
        found = static_cast<int>(i);
        break;
      }
    REQUIRE(found >= 0);
    const Eigen::VectorXd second =
        pairs.col(b).tail(kAmpDim).cwiseProduct(ds.std) + ds.mean;
    REQUIRE((ds.frames.col(found + 1).cast<double>() - second).lpNorm<Eigen::Infinity>() < 1e-9);
    // never the last frame of a segment
    for (const auto& seg : ds.segments)
      REQUIRE(found != static_cast<int>(seg.start + seg.frames - 1));
  }
}

TEST_CASE("pair sampling is reproducible and bounded", "[priors]") {
  const PriorDataset ds = build_dataset(model(), GaitParams{}, {{0.3, 0, 0}}, 1.0);
  Rng a(5), b(5);
  REQUIRE(sample_real_pairs(ds, 32, a) == sample_real_pairs(ds, 32, b));
  Rng c(6);
  REQUIRE_THROWS_AS(sample_real_pairs(ds, 100000, c), std::runtime_error);
}

TEST_CASE("normalized samples have near-zero mean", "[priors]") {
  const PriorDataset ds = build_dataset(model(), GaitParams{}, default_command_list(), 2.0);
  Rng rng(71);
  double acc = 0;
  long count = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const Eigen::MatrixXd pairs = sample_real_pairs(ds, 256, rng);
    acc += pairs.topRows(kAmpDim).sum();
    count += pairs.topRows(kAmpDim).size();
  }
  REQUIRE(std::abs(acc / count) < 0.1);
}

TEST_CASE("gait parameter validation", "[priors]") {
  GaitParams p;
  p.period = -1;
  REQUIRE_THROWS_AS(generate_segment(model(), p, 1.0), std::invalid_argument);
  p = GaitParams{};
  p.step_height = 0.2;
  REQUIRE_THROWS_AS(generate_segment(model(), p, 1.0), std::invalid_argument);
}
