#include <algorithm>

#include "doctest.h"
#include "pr/core.hpp"
#include "pr/rng.hpp"

using namespace pr;

namespace {

JointSchema make_schema(int n) {
  JointSchema s;
  for (int i = 0; i < n; ++i) s.names.push_back("j" + std::to_string(i));
  for (int i = 3; i + 1 < n; i += 2) s.flip_pairs.emplace_back(i, i + 1);
  s.head_pair = {0, 1};
  s.validate();
  return s;
}

Pose random_pose(RngStream& s, int n, double present_prob = 1.0) {
  Pose p;
  p.joints.resize(n);
  for (auto& j : p.joints) {
    j.present = s.bernoulli(present_prob);
    j.x = s.uniform(-50, 250);
    j.y = s.uniform(-50, 250);
  }
  return p;
}

}  // namespace

TEST_CASE("pose_bbox basic examples") {
  Pose p;
  p.joints.resize(3);
  p.joints[0] = {0, 0, true, {}};
  p.joints[1] = {10, 20, true, {}};
  Rect r = pose_bbox(p);
  CHECK(r.x0 == 0);
  CHECK(r.y0 == 0);
  CHECK(r.x1 == 10);
  CHECK(r.y1 == 20);

  Pose q;
  q.joints.resize(2);
  q.joints[0] = {5, 5, true, {}};
  Rect d = pose_bbox(q);
  CHECK(d.x0 == 5);
  CHECK(d.x1 == 5);
  CHECK(d.y0 == 5);
  CHECK(d.y1 == 5);
}

TEST_CASE("pose_bbox equals brute-force min/max over present joints") {
  RngStream s(11);
  for (int trial = 0; trial < 50; ++trial) {
    Pose p = random_pose(s, 16, 0.8);
    if (p.present_count() == 0) {
      CHECK_THROWS_AS(pose_bbox(p), NoJointsPresent);
      continue;
    }
    double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
    for (const auto& j : p.joints) {
      if (!j.present) continue;
      x0 = std::min(x0, j.x);
      y0 = std::min(y0, j.y);
      x1 = std::max(x1, j.x);
      y1 = std::max(y1, j.y);
    }
    Rect r = pose_bbox(p);
    CHECK(r.x0 == x0);
    CHECK(r.y0 == y0);
    CHECK(r.x1 == x1);
    CHECK(r.y1 == y1);
  }
}

TEST_CASE("pose_bbox ignores absent joints' coordinates") {
  Pose p;
  p.joints.resize(3);
  p.joints[0] = {1, 2, true, {}};
  p.joints[1] = {9, 9, true, {}};
  p.joints[2] = {1e9, -1e9, false, {}};
  Rect r = pose_bbox(p);
  CHECK(r.x1 == 9);
  CHECK(r.y0 == 2);
}

TEST_CASE("pose_bbox throws when all joints absent") {
  Pose p;
  p.joints.resize(4);
  CHECK_THROWS_AS(pose_bbox(p), NoJointsPresent);
}

TEST_CASE("flip_pose reflection formula and pair exchange") {
  JointSchema s = make_schema(6);  // pairs (3,4)
  Pose p;
  p.joints.resize(6);
  p.joints[3] = {10, 50, true, {}};  // "left"
  Pose f = flip_pose(p, s, 100);
  CHECK(!f.joints[3].present);
  CHECK(f.joints[4].present);
  CHECK(f.joints[4].x == doctest::Approx(89.0));
  CHECK(f.joints[4].y == doctest::Approx(50.0));
}

TEST_CASE("flip_pose is an involution") {
  JointSchema s = make_schema(8);
  RngStream rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Pose p = random_pose(rng, 8, 0.7);
    const double width = rng.uniform(10, 500);
    Pose ff = flip_pose(flip_pose(p, s, width), s, width);
    for (int j = 0; j < 8; ++j) {
      CHECK(ff.joints[j].present == p.joints[j].present);
      if (p.joints[j].present) {
        CHECK(ff.joints[j].x == doctest::Approx(p.joints[j].x).epsilon(1e-12));
        CHECK(ff.joints[j].y == p.joints[j].y);
      }
    }
  }
}

TEST_CASE("flip_pose of all-absent pose stays all-absent") {
  JointSchema s = make_schema(6);
  Pose p;
  p.joints.resize(6);
  Pose f = flip_pose(p, s, 64);
  CHECK(f.present_count() == 0);
}

TEST_CASE("schema validation rejects bad input") {
  JointSchema s = make_schema(6);
  s.names[1] = s.names[0];
  CHECK_THROWS_AS(s.validate(), PoseError);

  JointSchema t = make_schema(6);
  t.flip_pairs.push_back({3, 5});  // joint 3 already paired
  CHECK_THROWS_AS(t.validate(), PoseError);

  JointSchema u = make_schema(6);
  u.head_pair = {0, 6};
  CHECK_THROWS_AS(u.validate(), PoseError);
}
