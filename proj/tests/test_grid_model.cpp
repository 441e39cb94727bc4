#include <catch2/catch_amalgamated.hpp>

#include "ctlqr/ctlqr.hpp"
#include "test_support.hpp"

using namespace ctlqr;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using test_support::normal_matrix;

TEST_CASE("grid endpoints and spacing", "[grid]") {
  TimeGrid g(0.7, 7);
  REQUIRE(g.node(0) == 0.0);
  REQUIRE(g.node(7) == 0.7);  // final node is the horizon itself, not 7*dt
  REQUIRE(g.nodes() == 8);
  REQUIRE(g.dt() == 0.7 / 7);
  for (int j = 1; j < 7; ++j) REQUIRE(g.node(j) == j * g.dt());
  REQUIRE(TimeGrid(0.7, 7) == g);
  REQUIRE(TimeGrid(0.7, 8) != g);
  REQUIRE(TimeGrid(0.8, 7) != g);
}

TEST_CASE("grid rejects bad parameters", "[grid]") {
  REQUIRE_THROWS_AS(TimeGrid(0.0, 10), ShapeError);
  REQUIRE_THROWS_AS(TimeGrid(-1.0, 10), ShapeError);
  REQUIRE_THROWS_AS(TimeGrid(1.0, 0), ShapeError);
}

TEST_CASE("path evaluation hits nodes bit-exactly", "[grid]") {
  TimeGrid g(0.7, 7);
  RandomStream rs(3, 0);
  std::vector<MatrixXd> vals(g.nodes());
  for (int j = 0; j < g.nodes(); ++j) vals[j] = normal_matrix(rs, 10 * j, 2, 3);
  MatrixPath p(g, vals);
  for (int j = 0; j < g.nodes(); ++j) {
    const MatrixXd diff = p.eval(g.node(j)) - vals[j];
    REQUIRE(diff.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("path interpolates linearly between nodes", "[grid]") {
  TimeGrid g(1.0, 4);
  std::vector<MatrixXd> vals(5);
  for (int j = 0; j < 5; ++j) vals[j] = MatrixXd::Constant(1, 1, double(j * j));
  MatrixPath p(g, vals);
  // midpoint of [0.25, 0.5] mixes 1 and 4 equally
  REQUIRE(std::abs(p.eval(0.375)(0, 0) - 2.5) < 1e-14);
  REQUIRE(std::abs(p.eval(0.1)(0, 0) - 0.4) < 1e-14);
  // clamped outside the horizon
  REQUIRE(p.eval(-0.5)(0, 0) == 0.0);
  REQUIRE(p.eval(2.0)(0, 0) == 16.0);
}

TEST_CASE("path shape checks", "[grid]") {
  TimeGrid g(1.0, 2);
  std::vector<MatrixXd> tooFew(2, MatrixXd::Zero(1, 1));
  REQUIRE_THROWS_AS(MatrixPath(g, tooFew), ShapeError);
  std::vector<MatrixXd> ragged{MatrixXd::Zero(1, 1), MatrixXd::Zero(2, 1),
                               MatrixXd::Zero(1, 1)};
  REQUIRE_THROWS_AS(MatrixPath(g, ragged), ShapeError);
  MatrixPath c = MatrixPath::constant(g, MatrixXd::Constant(2, 2, 3.0));
  REQUIRE(c.value(0) == c.value(2));
  REQUIRE(c.max_node_norm_inf() == 3.0);
}

TEST_CASE("initial second moment", "[model]") {
  VectorXd m0(2);
  m0 << 1.0, 1.0;
  InitialDistribution init(m0, MatrixXd::Identity(2, 2));
  MatrixXd y0 = second_moment_initial(init);
  MatrixXd want(2, 2);
  want << 2.0, 1.0, 1.0, 2.0;
  REQUIRE((y0 - want).cwiseAbs().maxCoeff() == 0.0);

  InitialDistribution centered(VectorXd::Zero(2), 0.5 * MatrixXd::Identity(2, 2));
  REQUIRE((second_moment_initial(centered) - centered.cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model shape validation", "[model]") {
  TimeGrid g(1.0, 4);
  auto cpath = [&](int r, int c) { return MatrixPath::constant(g, MatrixXd::Zero(r, c)); };
  InitialDistribution init(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  MatrixPath R = MatrixPath::constant(g, MatrixXd::Identity(1, 1));

  REQUIRE_NOTHROW(LQRModel(g, cpath(2, 2), cpath(2, 1), cpath(2, 2), R, cpath(2, 2),
                           MatrixXd::Identity(2, 2), 1.0, 0.5, init));
  // B with wrong row count
  REQUIRE_THROWS_AS(LQRModel(g, cpath(2, 2), cpath(3, 1), cpath(2, 2), R, cpath(2, 2),
                             MatrixXd::Identity(2, 2), 1.0, 0.5, init),
                    ShapeError);
  // R not k x k
  REQUIRE_THROWS_AS(LQRModel(g, cpath(2, 2), cpath(2, 1), cpath(2, 2),
                             MatrixPath::constant(g, MatrixXd::Identity(2, 2)),
                             cpath(2, 2), MatrixXd::Identity(2, 2), 1.0, 0.5, init),
                    ShapeError);
  // path on a different grid
  TimeGrid other(1.0, 5);
  REQUIRE_THROWS_AS(LQRModel(g, MatrixPath::constant(other, MatrixXd::Zero(2, 2)),
                             cpath(2, 1), cpath(2, 2), R, cpath(2, 2),
                             MatrixXd::Identity(2, 2), 1.0, 0.5, init),
                    ShapeError);
  // nonpositive delta floor
  REQUIRE_THROWS_AS(LQRModel(g, cpath(2, 2), cpath(2, 1), cpath(2, 2), R, cpath(2, 2),
                             MatrixXd::Identity(2, 2), 1.0, 0.0, init),
                    ShapeError);
}

TEST_CASE("symmetric slots are symmetrized and the deviation recorded", "[model]") {
  TimeGrid g(1.0, 2);
  MatrixXd Qskew(2, 2);
  Qskew << 1.0, 0.1, 0.0, 1.0;
  InitialDistribution init(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  LQRModel m(g, MatrixPath::constant(g, MatrixXd::Zero(2, 2)),
             MatrixPath::constant(g, MatrixXd::Zero(2, 1)),
             MatrixPath::constant(g, Qskew),
             MatrixPath::constant(g, MatrixXd::Identity(1, 1)),
             MatrixPath::constant(g, MatrixXd::Zero(2, 2)), MatrixXd::Identity(2, 2),
             1.0, 0.5, init);
  REQUIRE(symmetry_deviation(m.Q().value(0)) == 0.0);
  REQUIRE(std::abs(m.Q().value(0)(0, 1) - 0.05) < 1e-16);
  REQUIRE(m.symmetryDeviation() == 0.1);

  auto issues = validate_model(m);
  REQUIRE(issues.size() == 1);
  REQUIRE(issues[0].condition == "symmetric slots symmetric");
}

TEST_CASE("benchmark models validate cleanly", "[model]") {
  REQUIRE(validate_model(make_scalar_benchmark(50)).empty());
  REQUIRE(validate_model(make_lq2d_benchmark(50)).empty());
  for (std::uint64_t s = 1; s <= 10; ++s)
    REQUIRE(validate_model(test_support::random_model(s, 4, 3, 20)).empty());
}

TEST_CASE("validation flags each admissibility condition", "[model]") {
  TimeGrid g(1.0, 4);
  InitialDistribution init(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  auto mk = [&](double q, double r, double qp, double tau, InitialDistribution in) {
    return LQRModel(g, MatrixPath::constant(g, MatrixXd::Zero(1, 1)),
                    MatrixPath::constant(g, MatrixXd::Identity(1, 1)),
                    MatrixPath::constant(g, MatrixXd::Constant(1, 1, q)),
                    MatrixPath::constant(g, MatrixXd::Constant(1, 1, r)),
                    MatrixPath::constant(g, MatrixXd::Zero(1, 1)),
                    MatrixXd::Constant(1, 1, qp), tau, 0.5, in);
  };

  SECTION("R below the control floor, reported at every node") {
    auto issues = validate_model(mk(1.0, 0.1, 1.0, 1.0, init));
    REQUIRE(issues.size() == 5);
    for (int j = 0; j < 5; ++j) {
      REQUIRE(issues[j].condition == "R_t - delta*I >= 0");
      REQUIRE(issues[j].node == j);
      REQUIRE(std::abs(issues[j].evidence - (-0.4)) < 1e-12);
    }
  }
  SECTION("negative state cost") {
    auto issues = validate_model(mk(-0.3, 1.0, 1.0, 1.0, init));
    REQUIRE(issues.size() == 5);
    REQUIRE(issues[0].condition == "Q_t >= 0");
  }
  SECTION("negative terminal cost") {
    auto issues = validate_model(mk(1.0, 1.0, -1.0, 1.0, init));
    REQUIRE(issues.size() == 1);
    REQUIRE(issues[0].condition == "Qprime >= 0");
    REQUIRE(issues[0].node == -1);
  }
  SECTION("nonpositive temperature") {
    auto issues = validate_model(mk(1.0, 1.0, 1.0, -2.0, init));
    REQUIRE(issues.size() == 1);
    REQUIRE(issues[0].condition == "tau > 0");
  }
  SECTION("point mass at a nonzero state is admissible") {
    InitialDistribution pt(VectorXd::Constant(1, 0.7), MatrixXd::Zero(1, 1));
    REQUIRE(validate_model(mk(1.0, 1.0, 1.0, 1.0, pt)).empty());
  }
  SECTION("point mass at the origin has a singular second moment") {
    InitialDistribution origin(VectorXd::Zero(1), MatrixXd::Zero(1, 1));
    auto issues = validate_model(mk(1.0, 1.0, 1.0, 1.0, origin));
    REQUIRE(issues.size() == 1);
    REQUIRE(issues[0].condition == "S0 + m0 m0^T > 0");
  }
  SECTION("validation is pure: repeated calls agree and do not mutate") {
    LQRModel bad = mk(-0.3, 0.1, 1.0, 1.0, init);
    auto a = validate_model(bad);
    auto b = validate_model(bad);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].condition == b[i].condition);
      REQUIRE(a[i].node == b[i].node);
      REQUIRE(a[i].evidence == b[i].evidence);
    }
  }
}

TEST_CASE("policy validation", "[model]") {
  TimeGrid g(1.0, 3);
  MatrixPath K = MatrixPath::constant(g, MatrixXd::Zero(1, 2));
  SECTION("covariance below its floor") {
    GaussianPolicy p(K, MatrixPath::constant(g, MatrixXd::Constant(1, 1, 1e-4)), 1e-2);
    auto issues = validate_policy(p);
    REQUIRE(issues.size() == 4);
    REQUIRE(issues[0].condition == "Sigma_t - delta1*I >= 0");
  }
  SECTION("well formed") {
    GaussianPolicy p(K, MatrixPath::constant(g, MatrixXd::Identity(1, 1)), 1e-2);
    REQUIRE(validate_policy(p).empty());
  }
  SECTION("shape mismatches") {
    REQUIRE_THROWS_AS(
        GaussianPolicy(K, MatrixPath::constant(g, MatrixXd::Identity(2, 2)), 1e-2),
        ShapeError);
    REQUIRE_THROWS_AS(
        GaussianPolicy(K, MatrixPath::constant(g, MatrixXd::Identity(1, 1)), 0.0),
        ShapeError);
  }
}

TEST_CASE("parameter distance", "[model]") {
  LQRModel a = make_lq2d_benchmark(40);
  REQUIRE(model_parameter_distance(a, a) == 0.0);
  LQRModel b = a.with_Qprime(a.Qprime() + 0.25 * MatrixXd::Identity(2, 2));
  REQUIRE(std::abs(model_parameter_distance(a, b) - 0.25) < 1e-14);
  REQUIRE_THROWS_AS(model_parameter_distance(a, make_scalar_benchmark(40)), ShapeError);
}

TEST_CASE("resampling a constant model changes only the grid", "[model]") {
  LQRModel m = make_lq2d_benchmark(40);
  LQRModel r = resample_model(m, 80);
  REQUIRE(r.grid().steps() == 80);
  REQUIRE(r.grid().horizon() == m.grid().horizon());
  REQUIRE((r.A().value(37) - m.A().value(0)).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE((r.Qprime() - m.Qprime()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(r.tau() == m.tau());
}
