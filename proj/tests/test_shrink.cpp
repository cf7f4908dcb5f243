#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "rglm/shrink.hpp"
#include "test_util.hpp"

using namespace rglm;
using rglm::test::Vec;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("norm_shrink examples") {
  CHECK(norm_shrink(vec({1, 0, 0}), 2.0, ShrinkNorm::l4) == vec({1, 0, 0}));
  CHECK(norm_shrink(vec({2, 0}), 1.0, ShrinkNorm::l4).isApprox(vec({1, 0})));
  const Vec y = norm_shrink(vec({1, 1}), 1.0, ShrinkNorm::l4);
  CHECK(y[0] == doctest::Approx(std::pow(2.0, -0.25)).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(0.840896).epsilon(1e-6));
  CHECK(norm_shrink(vec({3, 4}), 1.0, ShrinkNorm::l2).isApprox(vec({0.6, 0.8})));
}

TEST_CASE("norm_shrink zero vector and identity case") {
  CHECK(norm_shrink(vec({0, 0, 0}), 0.5, ShrinkNorm::l4) == vec({0, 0, 0}));
  const Vec x = vec({0.1, -0.3, 0.2});
  const Vec y = norm_shrink(x, 10.0, ShrinkNorm::l2);
  CHECK(y == x);  // bitwise
}

TEST_CASE("norm_shrink handles entries whose fourth power overflows") {
  const Vec x = vec({1e100, -1e100});
  const Vec y = norm_shrink(x, 1.0, ShrinkNorm::l4);
  CHECK(all_finite(y));
  CHECK(lp_norm(y, ShrinkNorm::l4) == doctest::Approx(1.0));
}

TEST_CASE("norm_shrink errors") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(norm_shrink(vec({1, nan}), 1.0, ShrinkNorm::l4), Error);
  try {
    norm_shrink(vec({1, 2}), 0.0, ShrinkNorm::l4);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_parameter);
  }
  try {
    norm_shrink(vec({std::numeric_limits<double>::infinity()}), 1.0, ShrinkNorm::l2);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
}

TEST_CASE("elementwise_clip examples") {
  CHECK(elementwise_clip(vec({3, -0.5, 2}), 1.0) == vec({1, -0.5, 1}));
  CHECK(elementwise_clip(vec({0, 0}), 0.7) == vec({0, 0}));
  CHECK(elementwise_clip(vec({-4, 4}), 2.5) == vec({-2.5, 2.5}));
  CHECK_THROWS_AS(elementwise_clip(vec({1}), -1.0), Error);
}

TEST_CASE("clip_response examples") {
  CHECK(clip_response(5.0, 2.0, true) == 2.0);
  CHECK(clip_response(-5.0, 2.0, true) == -2.0);
  CHECK(clip_response(-5.0, 2.0, false) == 2.0);
  CHECK(clip_response(0.0, 2.0, true) == 0.0);
  CHECK(clip_response(0.0, 2.0, false) == 0.0);
  CHECK(clip_response(1.5, 2.0, true) == 1.5);
  CHECK_THROWS_AS(clip_response(std::numeric_limits<double>::quiet_NaN(), 2.0, true), Error);
}

TEST_CASE("default_tau schedule") {
  CHECK(default_tau(54.598, TauScale::log_n) == doctest::Approx(1.922114).epsilon(1e-6));
  CHECK(default_tau(2, TauScale::log_n) == doctest::Approx(1.303320).epsilon(1e-6));
  CHECK(default_tau(10000, TauScale::log_n) == doctest::Approx(5.740254).epsilon(1e-6));
  for (double n : {3.0, 17.0, 1000.0, 1e6}) {
    CHECK(default_tau(n, TauScale::log_n, 2.0) == doctest::Approx(2.0 * default_tau(n, TauScale::log_n)));
    CHECK(default_tau(n, TauScale::log_d, 1.0, 1000) == doctest::Approx(std::pow(n / std::log(1000.0), 0.25)));
  }
  CHECK_THROWS_AS(default_tau(1, TauScale::log_n), Error);
  CHECK_THROWS_AS(default_tau(100, TauScale::log_d, 1.0, 1), Error);
  CHECK_THROWS_AS(default_tau(100, TauScale::log_n, 0.0), Error);
}

TEST_CASE("apply_shrink") {
  Dataset one;
  one.X = Eigen::RowVector2d(2, 0);
  one.z = Vec::Constant(1, 5.0);
  ShrinkSpec spec;
  spec.feature_mode = FeatureMode::norm_shrink_l4;
  spec.tau1 = 1.0;
  spec.response_mode = ResponseMode::clip;
  spec.tau2 = 2.0;

  SUBCASE("identity spec") {
    const Dataset out = apply_shrink(one, ShrinkSpec{});
    CHECK(out.X == one.X);
    CHECK(out.z == one.z);
  }
  SUBCASE("composition of single-row operators") {
    const Dataset out = apply_shrink(one, spec);
    CHECK(out.X(0, 0) == doctest::Approx(1.0));
    CHECK(out.X(0, 1) == 0.0);
    CHECK(out.z[0] == 2.0);
    CHECK(one.X(0, 0) == 2.0);  // input untouched
  }
  SUBCASE("rows transform independently; scoring fields pass through") {
    Dataset two;
    two.X.resize(2, 2);
    two.X << 2, 0, 0.3, -0.2;
    two.z = Eigen::Vector2d(5, -1);
    two.y_clean = Eigen::Vector2d(4, -1);
    two.flip_mask = std::vector<bool>{true, false};
    const Dataset out = apply_shrink(two, spec);
    for (Eigen::Index i = 0; i < 2; ++i) {
      const Dataset row = apply_shrink(two.subset({i}), spec);
      CHECK(out.X.row(i) == row.X.row(0));
      CHECK(out.z[i] == row.z[0]);
    }
    CHECK(*out.y_clean == *two.y_clean);
    CHECK(*out.flip_mask == *two.flip_mask);
  }
  SUBCASE("row index attached to errors") {
    Dataset bad = one;
    bad.X(0, 1) = std::numeric_limits<double>::infinity();
    try {
      apply_shrink(bad, spec);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("row 0") != std::string::npos);
    }
  }
  SUBCASE("invalid spec") {
    ShrinkSpec broken = spec;
    broken.tau1 = 0;
    CHECK_THROWS_AS(apply_shrink(one, broken), Error);
  }
}

TEST_CASE("shrink operator properties on random vectors") {
  std::mt19937_64 rng(7);
  std::student_t_distribution<double> heavy(1.5);
  std::uniform_real_distribution<double> tau_dist(0.05, 5.0);
  std::uniform_int_distribution<int> dim(1, 12);
  for (int rep = 0; rep < 2000; ++rep) {
    Vec x(dim(rng));
    for (auto& v : x) v = heavy(rng);
    const double tau = tau_dist(rng);
    for (ShrinkNorm norm : {ShrinkNorm::l2, ShrinkNorm::l4}) {
      const Vec y = norm_shrink(x, tau, norm);
      CHECK(lp_norm(y, norm) <= tau * (1 + 1e-12));
      CHECK(norm_shrink(y, tau, norm) == y);
      CHECK(lp_norm(y, norm) <= lp_norm(x, norm));
      const double scale = y.dot(x) / x.squaredNorm();
      CHECK(scale >= 0);
      CHECK((y - scale * x).norm() <= 1e-12 * x.norm());
    }
    const Vec c = elementwise_clip(x, tau);
    CHECK(elementwise_clip(c, tau) == c);
    for (Eigen::Index j = 0; j < x.size(); ++j)
      for (Eigen::Index k = 0; k < x.size(); ++k)
        if (x[j] <= x[k]) CHECK(c[j] <= c[k]);
    const double z = heavy(rng);
    CHECK(std::abs(clip_response(z, tau, true)) <= std::abs(z));
    CHECK(clip_response(clip_response(z, tau, true), tau, true) == clip_response(z, tau, true));
  }
}
