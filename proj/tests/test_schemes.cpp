#include <catch2/catch.hpp>

#include <random>

#include "frmg/schemes.hpp"
#include "helpers.hpp"

using namespace frmg;
using Catch::Detail::Approx;

TEST_CASE("BDF coefficients match the exact rationals", "[schemes]") {
  const auto b1 = schemes::make_bdf(1);
  CHECK(b1.B[0] == 1.0);
  CHECK(b1.B[1] == -1.0);

  const auto b2 = schemes::make_bdf(2);
  CHECK(b2.B[0] == Approx(2.0 / 3.0).epsilon(0));
  CHECK(b2.B[1] == Approx(-4.0 / 3.0).epsilon(0));
  CHECK(b2.B[2] == Approx(1.0 / 3.0).epsilon(0));

  const auto b3 = schemes::make_bdf(3);
  CHECK(b3.B[0] == Approx(6.0 / 11.0).epsilon(0));
  CHECK(b3.B[1] == Approx(-18.0 / 11.0).epsilon(0));
  CHECK(b3.B[2] == Approx(9.0 / 11.0).epsilon(0));
  CHECK(b3.B[3] == Approx(-2.0 / 11.0).epsilon(0));

  CHECK_THROWS_AS(schemes::make_bdf(0), InvalidInput);
  CHECK_THROWS_AS(schemes::make_bdf(4), InvalidInput);
}

TEST_CASE("BDF schemes integrate constants exactly", "[schemes]") {
  for (int s : {1, 2, 3}) {
    const auto bdf = schemes::make_bdf(s);
    double sum = 1.0;
    for (int l = 0; l < s; ++l) sum += bdf.B[l + 1];
    CHECK(std::abs(sum) < 1e-12);
  }
}

TEST_CASE("SSPRK3 satisfies the third-order conditions", "[schemes]") {
  const auto tab = schemes::make_ssprk3();
  REQUIRE(tab.r == 3);
  CHECK(tab.b[0] == Approx(1.0 / 6.0).epsilon(0));
  CHECK(tab.b[1] == Approx(1.0 / 6.0).epsilon(0));
  CHECK(tab.b[2] == Approx(2.0 / 3.0).epsilon(0));

  // direct evaluation of the order conditions
  double sb = 0, sbc = 0, sbc2 = 0, sbac = 0;
  for (int i = 0; i < 3; ++i) {
    sb += tab.b[i];
    sbc += tab.b[i] * tab.c[i];
    sbc2 += tab.b[i] * tab.c[i] * tab.c[i];
    for (int j = 0; j < 3; ++j) sbac += tab.b[i] * tab.A(i, j) * tab.c[j];
  }
  CHECK(sb == Approx(1.0).margin(1e-12));
  CHECK(sbc == Approx(0.5).margin(1e-12));
  CHECK(sbc2 == Approx(1.0 / 3.0).margin(1e-12));
  CHECK(sbac == Approx(1.0 / 6.0).margin(1e-12));

  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) CHECK(tab.A(i, j) == 0.0);
  CHECK(tab.c[0] == Approx(0.0).margin(1e-15));
  CHECK(tab.c[1] == Approx(1.0).margin(1e-15));
  CHECK(tab.c[2] == Approx(0.5).margin(1e-15));
}

TEST_CASE("load_tableau round-trips and validates", "[schemes]") {
  const auto ref = schemes::make_ssprk3();
  nlohmann::json j;
  j["stages"] = 3;
  j["A"] = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.25, 0.25, 0.0}};
  j["b"] = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
  const auto tab = schemes::load_tableau(j);
  CHECK((tab.A - ref.A).norm() == 0.0);
  CHECK((tab.b - ref.b).norm() == 0.0);
  CHECK((tab.c - ref.c).norm() == 0.0);

  auto bad = j;
  bad["A"][1][1] = 0.5;  // nonzero diagonal
  CHECK_THROWS_WITH(schemes::load_tableau(bad),
                    Catch::Contains("strictly lower triangular"));

  auto scaled = j;
  for (auto& v : scaled["b"]) v = 2.0 * v.get<double>();
  CHECK_THROWS_WITH(schemes::load_tableau(scaled),
                    Catch::Contains("does not sum to 1"));

  auto missing = j;
  missing.erase("b");
  CHECK_THROWS_AS(schemes::load_tableau(missing), InvalidInput);
}

TEST_CASE("stability polynomial closed form", "[schemes]") {
  const auto tab = schemes::make_ssprk3();
  const auto bdf = schemes::make_bdf(2);

  SECTION("kappa_0 equals the source weight rho/B0") {
    const double rho = 0.37;
    const auto sc = schemes::stability_polynomial(tab, bdf, rho);
    CHECK(sc.kappa[0] == Approx(rho / bdf.B[0]).margin(1e-15));
    CHECK(sc.kappa[0] == Approx(1.5 * rho).margin(1e-15));
  }

  SECTION("P at z = 0 is the analytic limit") {
    const auto sc = schemes::stability_polynomial(tab, bdf, 0.125);
    CHECK(sc.gamma[0] == Approx(1.0 - 0.125 / bdf.B[0]).margin(1e-15));
  }

  SECTION("P + C = R at random points on the unit disk") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& t : {schemes::make_ssprk3(), test::merson5()}) {
      const auto sc = schemes::stability_polynomial(t, bdf, 0.21);
      const auto rp = schemes::erk_polynomial(t);
      for (int i = 0; i < 100; ++i) {
        cplx z{u(rng), u(rng)};
        if (std::abs(z) > 1.0) z /= std::abs(z);
        const cplx lhs =
            schemes::eval_poly(sc.gamma, z) + schemes::eval_poly(sc.kappa, z);
        CHECK(std::abs(lhs - schemes::eval_poly(rp, z)) < 1e-12);
      }
    }
  }

  SECTION("P + C = R as a coefficient identity") {
    std::mt19937 rng(11);
    for (int stages : {2, 3, 5, 7}) {
      const auto t = test::random_tableau(rng, stages);
      const auto sc = schemes::stability_polynomial(t, bdf, 0.08);
      const auto rp = schemes::erk_polynomial(t);
      for (int j = 0; j <= stages; ++j) {
        const double kap = j < stages ? sc.kappa[j] : 0.0;
        CHECK(std::abs(sc.gamma[j] + kap - rp[j]) < 1e-12);
      }
    }
  }

  SECTION("coefficients depend only on the ratio dtau/dt") {
    const auto a = schemes::stability_polynomial(tab, bdf, 0.3);
    const auto b = schemes::stability_polynomial(tab, bdf, 0.6 / 2.0);
    CHECK((a.gamma - b.gamma).norm() == 0.0);
    CHECK((a.kappa - b.kappa).norm() == 0.0);
  }

  SECTION("nonpositive ratio is rejected") {
    CHECK_THROWS_AS(schemes::stability_polynomial(tab, bdf, 0.0), InvalidInput);
    CHECK_THROWS_AS(schemes::stability_polynomial(tab, bdf, -0.1), InvalidInput);
  }
}

TEST_CASE("SSPRK3 real-axis stability limit", "[schemes]") {
  const auto rp = schemes::erk_polynomial(schemes::make_ssprk3());
  // dense scan of |R| on the real axis
  for (double z = -2.512; z <= 0.0; z += 1e-3)
    REQUIRE(std::abs(schemes::eval_poly(rp, cplx{z, 0.0})) <= 1.0 + 1e-12);
  CHECK(std::abs(schemes::eval_poly(rp, cplx{-2.52, 0.0})) > 1.0);
}

TEST_CASE("tableau stage limit is enforced", "[schemes]") {
  std::mt19937 rng(3);
  nlohmann::json j;
  j["stages"] = 17;
  j["A"] = nlohmann::json::array();
  for (int i = 0; i < 17; ++i) j["A"].push_back(std::vector<double>(17, 0.0));
  j["b"] = std::vector<double>(17, 1.0 / 17.0);
  CHECK_THROWS_AS(schemes::load_tableau(j), InvalidInput);
  (void)rng;
}
