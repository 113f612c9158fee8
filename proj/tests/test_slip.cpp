#include <algorithm>
#include <cmath>

#include "proprio/simharness.hpp"
#include "proprio/slip.hpp"
#include "support.hpp"

using namespace proprio;
using doctest::Approx;

TEST_SUITE("slip") {

TEST_CASE("velocity deviation examples") {
  CHECK(compute_delta_v(Vec3(0.3, 0, 0), Vec3(0.3, 0, 0), 0.01) == 0.0);
  CHECK(compute_delta_v(Vec3(1, 0, 0), Vec3(0, 0, 0), 0.01) == Approx(1.0 / 1.01).epsilon(1e-15));
  CHECK(compute_delta_v(Vec3(0, 0, 0), Vec3(0.05, 0, 0), 0.01) == Approx(5.0).epsilon(1e-15));
}

TEST_CASE("velocity deviation rejects bad input") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(compute_delta_v(Vec3(nan, 0, 0), Vec3::Zero(), 0.01), ValidationError);
  CHECK_THROWS_AS(compute_delta_v(Vec3::Zero(), Vec3::Zero(), 0.0), ValidationError);
}

TEST_CASE("position discrepancy compares norms") {
  const Vec3 p(0.3, 0, -0.35);
  CHECK(compute_delta_p(p, p) == 0.0);
  CHECK(compute_delta_p(Vec3(0.4, 0, 0), Vec3(0, 0.37, 0)) == Approx(0.03).epsilon(1e-12));
  CHECK(compute_delta_p(Vec3(0.3, 0, -0.35), Vec3(-0.3, 0, 0.35)) == 0.0);
}

TEST_CASE("nearest-rank threshold examples") {
  const std::vector<double> ones = {1, 1, 1, 1};
  for (double p : {1.0, 50.0, 99.0}) CHECK(update_threshold(ones, p) == 1.0);
  std::vector<double> tenths;
  for (int k = 1; k <= 10; ++k) tenths.push_back(0.1 * k);
  CHECK(update_threshold(tenths, 90.0) == tenths[8]);
  CHECK(update_threshold(std::vector<double>{0.7}, 90.0) == 0.7);
  CHECK(std::isinf(update_threshold({}, 90.0)));
}

TEST_CASE("config validation") {
  SlipConfig c;
  CHECK_NOTHROW(c.validate());
  c.h = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.percentile = 100.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.window = 9;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.eps_p = -1.0;
  CHECK_THROWS_AS(SlipDetector{c}, ValidationError);
}

TEST_CASE("properties of the deviation measures") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 a = Vec3::Random();
    const Vec3 b = Vec3::Random();
    const double h = test::uniform(rng, 1e-3, 1.0);
    CHECK(compute_delta_v(a, a, h) == 0.0);
    CHECK(compute_delta_p(a, a) == 0.0);
    // Axis permutation applied to both vectors.
    const Vec3 pa(a.z(), a.x(), a.y());
    const Vec3 pb(b.z(), b.x(), b.y());
    CHECK(compute_delta_v(pa, pb, h) == Approx(compute_delta_v(a, b, h)).epsilon(1e-14));
    const double s = test::uniform(rng, 0.1, 10.0);
    CHECK(compute_delta_p(s * a, s * b) == Approx(s * compute_delta_p(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("detector guards swing feet and needs both conditions") {
  SlipDetector det;
  ProprioSample s = test::standing_sample(0.0);

  SUBCASE("all swing leaves the state untouched") {
    s.contact = {false, false, false, false};
    for (auto& v : s.foot_vel_base) v = Vec3(1, 1, 1);
    const auto v = det.detect(s);
    CHECK_FALSE(v.any());
    for (std::size_t f = 0; f < kFeet; ++f) CHECK(det.history(f).empty());
  }

  SUBCASE("large velocity deviation with equal norms is not a slip") {
    for (int k = 0; k < 20; ++k) {
      s.t = 0.01 * k;
      det.detect(s);
    }
    s.foot_vel_base[0] = Vec3(2.0, 0, 0);
    const auto v = det.detect(s);
    CHECK(v.feet[0].delta_v > v.feet[0].eps_v);
    CHECK(v.feet[0].delta_p == 0.0);
    CHECK_FALSE(v.feet[0].beta);
  }

  SUBCASE("no flag before the window holds ten samples") {
    s.foot_vel_base[1] = Vec3(1.0, 0, 0);
    s.foot_pos_base[1] *= 1.5;
    for (std::size_t k = 0; k < kSlipMinHistory; ++k) {
      const auto v = det.detect(s);
      CHECK(std::isinf(v.feet[1].eps_v));
      CHECK_FALSE(v.feet[1].beta);
    }
    CHECK(det.history(1).size() == kSlipMinHistory);
  }
}

TEST_CASE("a single flagged run starts once and the window trails the decision") {
  SlipConfig cfg;
  cfg.window = 10;
  SlipDetector det(cfg);
  ProprioSample s = test::standing_sample(0.0);
  for (int k = 0; k < 10; ++k) det.detect(s);
  // Growing deviation: every sample exceeds all earlier ones.
  std::vector<bool> starts;
  for (int k = 1; k <= 5; ++k) {
    s.foot_vel_base[2] = Vec3(0.1 * k, 0, 0);
    s.foot_pos_base[2] = s.foot_pos_des_base[2] * 1.2;
    const auto v = det.detect(s);
    CHECK(v.feet[2].beta);
    starts.push_back(v.feet[2].run_start);
    CHECK(det.history(2).back() == v.feet[2].delta_v);
  }
  CHECK(starts == std::vector<bool>{true, false, false, false, false});
  CHECK(det.history(2).size() == 10);
}

TEST_CASE("threshold window matches the batch nearest-rank oracle") {
  SlipConfig cfg;
  cfg.window = 37;
  cfg.percentile = 73.0;
  SlipDetector det(cfg);
  std::mt19937_64 rng(11);
  ProprioSample s = test::standing_sample(0.0);
  for (int k = 0; k < 500; ++k) {
    const auto& w = det.history(0);
    const double expected = w.size() < kSlipMinHistory
                                ? std::numeric_limits<double>::infinity()
                                : update_threshold(std::vector<double>(w.begin(), w.end()), 73.0);
    s.foot_vel_base[0] = Vec3(test::uniform(rng, -1, 1), 0, 0);
    const auto v = det.detect(s);
    CHECK(v.feet[0].eps_v == expected);
  }
}

TEST_CASE("harness slips above the positional threshold are all detected") {
  sim::ScenarioSpec spec;
  spec.path = {Vec2(0, 0), Vec2(8, 0)};
  spec.slips = sim::schedule_slips(spec, 8, 0.03);
  const auto run = sim::generate(spec);
  SlipDetector det;
  std::vector<std::pair<double, std::size_t>> flagged;
  std::size_t events = 0;
  for (const auto& s : run.samples) {
    const auto v = det.detect(s);
    for (std::size_t f = 0; f < kFeet; ++f) {
      if (v.feet[f].beta) {
        CHECK(s.contact[f]);
        flagged.emplace_back(s.t, f);
      }
      if (v.feet[f].run_start) ++events;
    }
  }
  CHECK(events == spec.slips.size());
  for (const auto& slip : run.truth.slips) {
    const bool hit = std::any_of(flagged.begin(), flagged.end(), [&](const auto& fl) {
      return fl.second == slip.foot && fl.first >= slip.t_start &&
             fl.first <= slip.t_start + slip.duration;
    });
    CHECK_MESSAGE(hit, "slip at t=" << slip.t_start << " foot " << slip.foot);
  }
}

TEST_CASE("re-running a stream reproduces the verdicts") {
  sim::ScenarioSpec spec;
  spec.path = {Vec2(0, 0), Vec2(5, 0)};
  spec.noise.velocity_std = 0.02;
  const auto run = sim::generate(spec);
  SlipDetector a, b;
  for (const auto& s : run.samples) {
    const auto va = a.detect(s);
    const auto vb = b.detect(s);
    for (std::size_t f = 0; f < kFeet; ++f) {
      CHECK(va.feet[f].beta == vb.feet[f].beta);
      CHECK(va.feet[f].eps_v == vb.feet[f].eps_v);
    }
  }
}

}  // TEST_SUITE
