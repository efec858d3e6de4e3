#include <doctest.h>

#include <cmath>

#include "chd/numerics.hpp"
#include "chd/profiles.hpp"

using namespace chd;

namespace {

ProfileSpec bump_spec(int n, double eu, double et = 0.0) {
  ProfileSpec s;
  s.family = eu != 0.0 ? "couette_bump" : "density_bump";
  s.n_y = n;
  s.eps_u = eu;
  s.eps_theta = et;
  return s;
}

double max_abs(const Vec& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

template <class F>
std::string kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "none";
}

}  // namespace

TEST_CASE("couette constant samples") {
  ChannelProfile p = couette_constant(129);
  CHECK(p.u[64] == doctest::Approx(0.5).epsilon(1e-15));
  for (int i = 0; i < p.n; ++i) {
    CHECK(p.du[i] == 1.0);
    CHECK(p.d2u[i] == 0.0);
    CHECK(p.coeffs[4][i] == 1.0);
    CHECK(p.coeffs[1][i] == 0.0);
    CHECK(p.coeffs[2][i] == 0.0);
  }
  Vec dchi = num::d1(p.chi2, p.h);
  for (int i = 0; i < p.n; ++i)
    CHECK(p.coeffs[6][i] == doctest::Approx(-2 * p.chi2[i] - 2 * p.y[i] * dchi[i]).epsilon(1e-14));
}

TEST_CASE("bump family: shear coefficient lives in the band") {
  ChannelProfile p = build_profile(bump_spec(257, 0.05));
  CHECK(p.report.ok);
  double inside = 0, outside = 0;
  for (int i = 0; i < p.n; ++i) {
    const double v = std::abs(p.shear_coef()[i]);
    // the stencil reaches two points past the band
    if (p.y[i] >= 0.4 - 2 * p.h && p.y[i] <= 0.6 + 2 * p.h) inside = std::max(inside, v);
    else outside = std::max(outside, v);
  }
  CHECK(inside > 0.1);
  CHECK(outside < 1e-12);
}

TEST_CASE("coefficient identities") {
  for (auto s : {bump_spec(129, 0.05, 0.1), bump_spec(129, 0.0, -0.2)}) {
    ChannelProfile p = build_profile(s);
    for (int i = 0; i < p.n; ++i) {
      CHECK(std::abs(p.coeffs[5][i] - p.coeffs[2][i] * p.coeffs[4][i]) <= 1e-14);
      CHECK(p.coeffs[9][i] == p.du[i]);
      CHECK(p.coeffs[10][i] == p.dtheta[i]);
      CHECK(p.coeffs[11][i] == p.theta[i]);
    }
  }
  // (u'/theta)' against a stencil derivative of the sampled ratio, under refinement
  double prev = 0;
  for (int n : {257, 1025}) {
    ChannelProfile p = build_profile(bump_spec(n, 0.05, 0.1));
    Vec ratio(p.n);
    for (int i = 0; i < p.n; ++i) ratio[i] = p.du[i] / p.theta[i];
    Vec d = num::d1(ratio, p.h);
    double err = 0;
    for (int i = 0; i < p.n; ++i) err = std::max(err, std::abs(p.coeffs[1][i] - d[i]));
    if (n == 1025) {
      CHECK(err < 1e-3);
      CHECK(prev / err > 50);
    }
    prev = err;
  }
}

TEST_CASE("validation errors") {
  CHECK(kind_of([] { couette_constant(31); }) == "GridTooCoarse");
  CHECK(kind_of([] { couette_constant(128); }) == "GridTooCoarse");

  ProfileSpec s;
  s.family = "custom";
  s.n_y = 65;
  s.u.resize(65);
  s.theta.assign(65, 1.0);
  for (int i = 0; i < 65; ++i) s.u[i] = -i / 64.0;
  CHECK(kind_of([&] { build_profile(s); }) == "MonotonicityViolation");

  for (int i = 0; i < 65; ++i) s.u[i] = i / 64.0;
  s.theta.assign(65, 0.2);
  CHECK(kind_of([&] { build_profile(s); }) == "PositivityViolation");

  // density varying right next to the wall
  const int n = 257;
  s.n_y = n;
  s.u.resize(n);
  s.theta.resize(n);
  Bump near{0.0, 0.04};
  for (int i = 0; i < n; ++i) {
    const double y = double(i) / (n - 1);
    s.u[i] = y;
    s.theta[i] = 1 + 0.05 * near.eval(y)[0];
  }
  CHECK(kind_of([&] { build_profile(s); }) == "SupportViolation");

  ProfileSpec bad;
  bad.family = "poiseuille";
  CHECK(kind_of([&] { build_profile(bad); }) == "UnknownFamily");
}

TEST_CASE("custom samples of a valid bump are accepted") {
  ChannelProfile ref = build_profile(bump_spec(257, 0.05, 0.05));
  ProfileSpec s;
  s.family = "custom";
  s.n_y = 257;
  s.u = ref.u;
  s.theta = ref.theta;
  ChannelProfile p = build_profile(s);
  CHECK(p.report.ok);
  double err = 0;
  for (int i = 0; i < p.n; ++i) err = std::max(err, std::abs(p.du[i] - ref.du[i]));
  CHECK(err < 1e-3);
}

TEST_CASE("cut-offs") {
  ChannelProfile p = couette_constant(201);
  CHECK(p.chi2[100] == 1.0);  // y = 0.5
  CHECK(p.chi2[2] == 0.0);    // y = 0.01
  CHECK(p.chi1[40] == 1.0);
  CHECK(p.chi1[10] == 0.0);
  // monotone on each transition
  for (int i = 0; i + 1 < p.n; ++i) {
    if (p.y[i] < 0.5) {
      CHECK(p.chi2[i + 1] >= p.chi2[i]);
      CHECK(p.chi1[i + 1] >= p.chi1[i]);
    } else {
      CHECK(p.chi2[i + 1] <= p.chi2[i]);
      CHECK(p.chi1[i + 1] <= p.chi1[i]);
    }
  }
  for (double v : p.chi1) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(kind_of([] { gevrey_cutoff(0.2, 0.8, 0.1, 0.7, 33); }) == "InvalidInterval");
  // upsilon lives on the image of u
  CHECK(p.v_grid.front() == p.u.front());
  CHECK(p.upsilon2[100] == 1.0);
}

TEST_CASE("determinism") {
  ChannelProfile a = build_profile(bump_spec(257, 0.05, 0.03));
  ChannelProfile b = build_profile(bump_spec(257, 0.05, 0.03));
  CHECK(a.u == b.u);
  CHECK(a.theta == b.theta);
  for (int j = 1; j <= 11; ++j) CHECK(a.coeffs[j] == b.coeffs[j]);
}

TEST_CASE("stencil converges at fourth order") {
  Vec err;
  for (int n : {513, 1025, 2049}) {
    ChannelProfile p = build_profile(bump_spec(n, 0.05));
    Vec d = num::d1(p.u, p.h);
    double e = 0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(d[i] - p.du[i]));
    err.push_back(e);
  }
  CHECK(err[0] / err[1] > 12.0);
  CHECK(err[1] / err[2] > 12.0);
}

TEST_CASE("closed-form bump derivatives up to fourth order") {
  // third derivative of u is eps B''; compare with differences of the lower ones
  Bump b{0.4, 0.6};
  for (double y : {0.43, 0.47, 0.5, 0.52, 0.58}) {
    const double d = 1e-5;
    auto lo = b.eval(y - d), hi = b.eval(y + d), c = b.eval(y);
    for (int m = 0; m < 3; ++m) {
      const double fd = (hi[m] - lo[m]) / (2 * d);
      CHECK(std::abs(fd - c[m + 1]) <= 1e-6 * (1 + std::abs(c[m + 1])));
    }
  }
  // integral matches its derivative
  const double d = 1e-6;
  CHECK(std::abs((b.integral(0.5 + d) - b.integral(0.5 - d)) / (2 * d) - 1.0) < 1e-9);
  CHECK(b.integral(0.3) == 0.0);
}

TEST_CASE("json round trip") {
  ProfileSpec s = bump_spec(129, 0.05, 0.01);
  ProfileSpec r = profile_from_json(profile_to_json(s));
  CHECK(r.family == s.family);
  CHECK(r.n_y == s.n_y);
  CHECK(r.eps_u == s.eps_u);
  CHECK(r.eps_theta == s.eps_theta);
  CHECK(kind_of([] { profile_from_json("{\"family\": \"couette_bump\", \"wobble\": 1}"); }) == "UnknownKey");
  CHECK(kind_of([] { profile_from_json("{not json"); }) == "ParseError");
}
