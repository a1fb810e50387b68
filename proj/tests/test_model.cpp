#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "srg/model.hpp"

using namespace srg;

TEST_CASE("chi plateau, support and ramp midpoint") {
  CHECK(chi(0.5, 1.0) == 1.0);
  CHECK(chi(1.2, 1.0) == 0.0);
  CHECK(chi(0.875, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(chi(0.75, 1.0) == 1.0);
  CHECK(chi(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  // rescaled
  CHECK(chi(0.875 * 0.25, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("partition of unity and monotone ramp") {
  double prev = 1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double x = 1.3 * i / 2000.0;
    const double c = chi(x), cb = chibar(x);
    CHECK(std::abs(c * c + cb * cb - 1.0) <= 1e-14);
    CHECK(c <= prev + 1e-15);
    prev = c;
  }
}

TEST_CASE("chi derivative against central differences") {
  const double h = 1e-6;
  double sup = 0;
  for (int i = 1; i < 400; ++i) {
    const double x = 0.7 + 0.35 * i / 400.0;
    const double fd = (chi(x + h) - chi(x - h)) / (2 * h);
    CHECK(chi_derivative(x) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    sup = std::max(sup, std::abs(chi_derivative(x)));
  }
  CHECK(sup <= chi_derivative_bound() + 1e-12);
  CHECK(chi_derivative_bound() == doctest::Approx(2.0 * M_PI));
}

TEST_CASE("form factor") {
  CHECK(form_factor(0.0) == 0.0);
  CHECK(form_factor(1.0) == 1.0);
  CHECK(form_factor(2.0) == 0.0);
  CHECK(form_factor(0.25) == doctest::Approx(0.5));
  std::mt19937 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    const Vec3 k(n(rng), n(rng), n(rng));
    const Vec3 k2 = Eigen::AngleAxisd(n(rng), Vec3(n(rng), n(rng), n(rng)).normalized()) * (0.4 * k.normalized());
    CHECK(form_factor(0.4 * k.normalized()) == doctest::Approx(form_factor(k2)).epsilon(1e-14));
  }
}

TEST_CASE("polarization frame") {
  const Vec3 e1 = polarization(Vec3(1, 0, 0), 1);
  CHECK(std::abs(e1.norm() - 1.0) < 1e-14);
  CHECK(std::abs(e1.dot(Vec3(1, 0, 0))) < 1e-14);
  std::mt19937 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const Vec3 k(n(rng), n(rng), n(rng));
    const Vec3 a = polarization(k, 1), b = polarization(k, 2);
    CHECK(std::abs(a.dot(b)) < 1e-14);
    CHECK(std::abs(a.dot(k)) < 1e-13);
    CHECK(std::abs(b.dot(k)) < 1e-13);
    CHECK(std::abs(a.norm() - 1) < 1e-14);
  }
  CHECK((polarization(Vec3(0, 0, 1), 1) - Vec3(1, 0, 0)).norm() < 1e-14);
  CHECK((polarization(Vec3(0, 0, 1), 2) - Vec3(0, 1, 0)).norm() < 1e-14);
  CHECK_THROWS(polarization(Vec3::Zero(), 1));
}

TEST_CASE("parameter validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.mu() == 0.5);
  CHECK(p.rho0_levels() == 3);
  auto bad = [](auto edit, const std::string& field) {
    ModelParams q;
    edit(q);
    try {
      q.validate();
      FAIL("accepted invalid " << field);
    } catch (const ParamError& e) {
      CHECK(e.field() == field);
    }
  };
  bad([](ModelParams& q) { q.m = -1; }, "m");
  bad([](ModelParams& q) { q.rho = 0.5; }, "rho");
  bad([](ModelParams& q) { q.xi = 0.06; }, "xi");
  bad([](ModelParams& q) { q.rho0 = 0.25; }, "rho0");
  bad([](ModelParams& q) { q.lambda0 = -0.1; }, "lambda0");
  bad([](ModelParams& q) { q.p = Vec3(0.6, 0, 0); }, "p");
  bad([](ModelParams& q) { q.p_star = Vec3(1.0, 0, 0); }, "p_star");
  bad([](ModelParams& q) { q.dim = 2; }, "dim");
}

TEST_CASE("spin coupling defaults to sigma_x") {
  ModelParams p;
  CHECK((p.spin_matrix() - pauli::x()).norm() == 0.0);
  p.spin_x = 1;
  p.spin_z = 1;
  CHECK((p.spin_matrix() - pauli::x() - pauli::z()).norm() == 0.0);
}
