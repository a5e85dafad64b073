#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "spocc/error.hpp"
#include "spocc/learners.hpp"
#include "oracles.hpp"

using namespace spocc;
using namespace oracle;

// ======================================================================= tree

TEST_CASE("tree: constant targets give a single leaf") {
  const auto x = random_points(30, 1);
  const std::vector<double> y(30, 2.5);
  const auto f = fit_tree(x, y, exact_tree(6, 1));
  CHECK(std::get<TreeModel>(f.model()).num_leaves() == 1);
  CHECK(f.predict({0.3, 0.9}) == 2.5);
  CHECK(f.predict({-10.0, 40.0}) == 2.5);
}

TEST_CASE("tree: one-dimensional step") {
  const std::vector<Point> x = {{0.1, 0.5}, {0.2, 0.5}, {0.8, 0.5}, {0.9, 0.5}};
  const std::vector<double> y = {0.0, 0.0, 4.0, 4.0};
  const auto f = fit_tree(x, y, exact_tree(6, 1));
  const auto& m = std::get<TreeModel>(f.model());
  REQUIRE(m.num_leaves() == 2);
  CHECK(m.nodes[0].axis == 0);
  CHECK(m.nodes[0].threshold > 0.2);
  CHECK(m.nodes[0].threshold < 0.8);
  CHECK(f.predict({0.0, 0.0}) == 0.0);
  CHECK(f.predict({1.0, 0.0}) == 4.0);
}

TEST_CASE("tree: single site") {
  const std::vector<Point> x = {{0.4, 0.4}};
  const std::vector<double> y = {-1.25};
  CHECK(fit_tree(x, y, exact_tree(6, 1)).predict({3.0, 3.0}) == -1.25);
  CHECK(fit_tree(x, y).predict({0.4, 0.4}) == doctest::Approx(-1.25 / 2.0));  // default shrinkage 1
}

TEST_CASE("tree: SSE equals exhaustive enumeration of depth <= 2 trees") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int n = 14 + static_cast<int>(seed % 4) * 4;
    const auto x = random_points(n, seed);
    auto y = random_targets(n, seed + 100);
    if (seed % 3 == 0) {
      // checkerboard: the root split has almost no value on its own
      for (int i = 0; i < n; ++i) {
        const auto& p = x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(i)] = 0.1 * y[static_cast<std::size_t>(i)] + ((p[0] < 0.5) == (p[1] < 0.5) ? 1.0 : -1.0);
      }
    }
    for (int depth = 1; depth <= 2; ++depth) {
      for (int min_leaf : {1, 3}) {
        CAPTURE(seed);
        CAPTURE(depth);
        CAPTURE(min_leaf);
        const auto f = fit_tree(x, y, exact_tree(depth, min_leaf));
        CHECK(std::abs(fitted_sse(f, x, y) - brute_force_tree_sse(x, y, depth, min_leaf)) <= 1e-9);
        CHECK(std::get<TreeModel>(f.model()).depth() <= depth);
      }
    }
  }
}

TEST_CASE("tree: leaves respect min_leaf and depth") {
  const auto x = random_points(200, 5);
  const auto y = random_targets(200, 6);
  TreeParams hp = exact_tree(4, 9);
  const auto f = fit_tree(x, y, hp);
  const auto& m = std::get<TreeModel>(f.model());
  CHECK(m.depth() <= 4);
  for (const auto& node : m.nodes) {
    if (node.axis < 0) CHECK(node.count >= 9);
  }
}

TEST_CASE("tree: complexity and shrinkage") {
  const auto x = random_points(100, 8);
  const auto y = random_targets(100, 9);
  TreeParams loose = exact_tree(6, 2);
  TreeParams strict = loose;
  strict.complexity = 0.5;
  CHECK(std::get<TreeModel>(fit_tree(x, y, strict).model()).num_leaves() <
        std::get<TreeModel>(fit_tree(x, y, loose).model()).num_leaves());
  TreeParams shrunk = exact_tree(0, 1);
  shrunk.leaf_shrinkage = 4.0;
  double sum = 0.0;
  for (double v : y) sum += v;
  CHECK(fit_tree(x, y, shrunk).predict({0.5, 0.5}) == doctest::Approx(sum / 104.0));
}

TEST_CASE("tree: hyperparameter validation") {
  const auto x = random_points(5, 1);
  const auto y = random_targets(5, 1);
  TreeParams bad;
  bad.min_leaf = 0;
  CHECK_THROWS_AS(fit_tree(x, y, bad), InvalidArgument);
  CHECK_THROWS_AS(fit_tree({}, {}), InvalidArgument);
  CHECK_THROWS_AS(tree_params(LearnerSpec{LearnerKind::tree, {{"depth", 3}}}), InvalidArgument);
  CHECK_THROWS_AS(tree_params(LearnerSpec{LearnerKind::tree, {{"max_depth", 2.5}}}), InvalidArgument);
  CHECK(tree_params(LearnerSpec{LearnerKind::tree, {{"max_depth", 3}}}).max_depth == 3);
}

// ======================================================================== SVR

TEST_CASE("svr: flat targets inside the tube") {
  const auto x = random_points(20, 3);
  const std::vector<double> y(20, 0.7);
  const auto f = fit_svr(x, y);
  const auto& m = std::get<SvrModel>(f.model());
  CHECK(m.support.empty());
  CHECK(m.bias == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(f.predict({5.0, -5.0}) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("svr: two-point analytic dual") {
  for (double gamma : {0.5, 2.0, 10.0}) {
    const std::vector<Point> x = {{0.2, 0.3}, {0.6, 0.5}};
    const std::vector<double> y = {1.0, -1.0};
    SvrParams hp;
    hp.C = 1e6;
    hp.epsilon = 0.0;
    hp.rbf_gamma = gamma;
    hp.tol = 1e-10;
    const auto f = fit_svr(x, y, hp);
    const double k = std::exp(-gamma * (0.4 * 0.4 + 0.2 * 0.2));
    const double beta = 1.0 / (1.0 - k);
    const SvrCoefs c = coefficients(f, x);
    CHECK(c.beta[0] == doctest::Approx(beta).epsilon(1e-8));
    CHECK(c.beta[1] == doctest::Approx(-beta).epsilon(1e-8));
    CHECK(std::abs(c.b) < 1e-8);
    CHECK(f.predict(x[0]) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(f.predict(x[1]) == doctest::Approx(-1.0).epsilon(1e-8));
  }
}

TEST_CASE("svr: objective matches active-set enumeration on 2-3 point problems") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 2;
    const auto x = random_points(n, 1000 + static_cast<std::uint64_t>(trial));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = u(rng);
    SvrParams hp;
    hp.C = trial % 3 == 0 ? 0.3 : 5.0;
    hp.epsilon = trial % 4 == 0 ? 0.0 : 0.2;
    hp.rbf_gamma = 3.0;
    const auto f = fit_svr(x, y, hp);
    const Eigen::MatrixXd K = rbf_matrix(x, hp.rbf_gamma);
    const SvrSolution oracle = enumerate_svr(K, y, hp.C, hp.epsilon);
    const SvrCoefs c = coefficients(f, x);
    CAPTURE(trial);
    CHECK(std::abs(svr_objective(K, y, c.beta, hp.epsilon) - oracle.objective) <= hp.tol);
    CHECK(kkt_violation(f, x, y, hp.C, hp.epsilon) <= hp.tol);
  }
}

TEST_CASE("svr: KKT conditions hold on larger problems") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto x = random_points(80, seed);
    const auto y = random_targets(80, seed + 7);
    SvrParams hp;
    hp.C = seed % 2 ? 1.0 : 10.0;
    const auto f = fit_svr(x, y, hp);
    CHECK(kkt_violation(f, x, y, hp.C, hp.epsilon) <= 1e-4);
    CHECK(std::get<SvrModel>(f.model()).kkt_violation < hp.tol);
  }
}

TEST_CASE("svr: iteration budget exhaustion is a convergence error") {
  const auto x = random_points(60, 2);
  const auto y = random_targets(60, 3);
  SvrParams hp;
  hp.C = 100.0;
  hp.max_passes = 1;
  hp.tol = 1e-12;
  try {
    fit_svr(x, y, hp);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.violation() >= hp.tol);
  }
}

TEST_CASE("svr: prediction decays to the bias far away") {
  const auto x = random_points(40, 11);
  const auto y = random_targets(40, 12);
  const auto f = fit_svr(x, y);
  CHECK(f.predict({50.0, 50.0}) == doctest::Approx(std::get<SvrModel>(f.model()).bias).epsilon(1e-12));
}

// ================================================================ low-rank GP

TEST_CASE("lowrank_gp: matches the dense normal-equation solve") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int n = 30 + 20 * static_cast<int>(seed);
    const auto x = random_points(n, seed);
    const auto r = random_targets(n, seed + 50);
    LowRankGpParams hp;
    hp.n_knots = seed % 2 ? 16 : 25;
    hp.range_phi = 0.25;
    hp.nugget_tau2 = 0.1 * static_cast<double>(seed);
    const auto f = fit_lowrank_gp(x, r, hp);
    const auto& m = std::get<LowRankGpModel>(f.model());
    const auto knots = knot_grid(BoundingBox::of(x), hp.n_knots);
    const Eigen::VectorXd w = gp_oracle_weights(x, r, knots, hp.range_phi, hp.sill_sigma2, hp.nugget_tau2);
    REQUIRE(m.weights.size() == w.size());
    CHECK((m.weights - w).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, w.cwiseAbs().maxCoeff()));
    for (const auto& s : random_points(10, seed + 9)) {
      double ref = 0.0;
      for (std::size_t j = 0; j < knots.size(); ++j) ref += exp_cov(s, knots[j], hp.range_phi, hp.sill_sigma2) * w(static_cast<Eigen::Index>(j));
      CHECK(std::abs(f.predict(s) - ref) <= 1e-8);
    }
  }
}

TEST_CASE("lowrank_gp: zero targets and single-site shrinkage") {
  const auto x = random_points(25, 4);
  const std::vector<double> zeros(25, 0.0);
  const auto f = fit_lowrank_gp(x, zeros);
  CHECK(std::get<LowRankGpModel>(f.model()).weights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.predict({0.1, 0.2}) == 0.0);

  const std::vector<Point> one = {{0.3, 0.7}};
  const std::vector<double> t = {2.0};
  const auto g = fit_lowrank_gp(one, t);
  CHECK(std::isfinite(g.predict(one[0])));
  CHECK(std::abs(g.predict(one[0])) < 2.0);
}

TEST_CASE("lowrank_gp: interpolation limit with one site per knot") {
  // Square basis, large sill, vanishing nugget: the fit reproduces the data.
  const auto sites = knot_grid(BoundingBox{{0.0, 0.0}, {1.0, 1.0}}, 9);
  std::vector<double> r(sites.size(), 0.0);
  r[4] = 1.5;
  r[0] = -0.5;
  LowRankGpParams hp;
  hp.n_knots = 9;
  hp.range_phi = 0.5;
  hp.sill_sigma2 = 100.0;
  hp.nugget_tau2 = 1e-10;
  const auto f = fit_lowrank_gp(sites, r, hp);
  for (std::size_t i = 0; i < sites.size(); ++i) CHECK(f.predict(sites[i]) == doctest::Approx(r[i]).scale(1.0).epsilon(1e-5));
}

TEST_CASE("lowrank_gp: far-field decay and validation") {
  const auto x = random_points(40, 2);
  const auto r = random_targets(40, 3);
  const auto f = fit_lowrank_gp(x, r);
  CHECK(std::abs(f.predict({100.0, 100.0})) < 1e-12);
  LowRankGpParams bad;
  bad.n_knots = 10;
  CHECK_THROWS_AS(fit_lowrank_gp(x, r, bad), InvalidArgument);
}

TEST_CASE("lowrank_gp: coincident sites with no nugget are singular") {
  const std::vector<Point> x(10, Point{0.5, 0.5});
  const std::vector<double> r(10, 1.0);
  LowRankGpParams hp;
  hp.n_knots = 16;
  hp.nugget_tau2 = 0.0;
  CHECK_THROWS_AS(fit_lowrank_gp(x, r, hp), LinearAlgebraError);
}

// ======================================================================= GMRF

TEST_CASE("gmrf: matches the dense solve on grids up to 20x20") {
  for (auto [nx, ny] : {std::pair{3, 3}, std::pair{5, 8}, std::pair{15, 15}, std::pair{20, 20}}) {
    const auto x = random_points(150, static_cast<std::uint64_t>(nx * 31 + ny));
    const auto r = random_targets(150, static_cast<std::uint64_t>(nx + ny));
    GmrfParams hp;
    hp.grid_nx = nx;
    hp.grid_ny = ny;
    hp.rho = 0.9;
    hp.tau_prec = 2.0;
    hp.obs_prec = 5.0;
    const auto f = fit_gmrf(x, r, hp);
    const auto& m = std::get<GmrfModel>(f.model());
    const auto box = BoundingBox::of(x);
    const Eigen::VectorXd u = gmrf_oracle(x, r, box.lo, box.hi, nx, ny, hp.rho, hp.tau_prec, hp.obs_prec);
    CAPTURE(nx);
    CAPTURE(ny);
    CHECK((m.effects - u).cwiseAbs().maxCoeff() <= 1e-8);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(f.predict(x[i]) == doctest::Approx(u(oracle_cell(x[i], box.lo, box.hi, nx, ny))).epsilon(1e-8));
    }
  }
}

TEST_CASE("gmrf: single occupied cell on a 3x3 grid") {
  // Sites spread to fix the box; only the centre cell carries a signal.
  const std::vector<Point> x = {{0.0, 0.0}, {1.0, 1.0}, {0.5, 0.5}};
  const std::vector<double> r = {0.0, 0.0, 3.0};
  GmrfParams hp;
  hp.grid_nx = 3;
  hp.grid_ny = 3;
  const auto f = fit_gmrf(x, r, hp);
  const auto& u = std::get<GmrfModel>(f.model()).effects;
  const Eigen::VectorXd ref = gmrf_oracle(x, r, {0.0, 0.0}, {1.0, 1.0}, 3, 3, hp.rho, hp.tau_prec, hp.obs_prec);
  CHECK((u - ref).cwiseAbs().maxCoeff() <= 1e-10);
  Eigen::Index arg = 0;
  u.cwiseAbs().maxCoeff(&arg);
  CHECK(arg == 4);
  for (int c : {1, 3, 5, 7}) {
    CHECK(u(c) > 0.0);
    CHECK(u(c) < u(4));
  }
}

TEST_CASE("gmrf: zero targets, clamped extrapolation, site-order invariance") {
  const auto x = random_points(60, 21);
  const std::vector<double> zeros(60, 0.0);
  const auto z = fit_gmrf(x, zeros);
  CHECK(std::get<GmrfModel>(z.model()).effects.cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.predict({9.0, -9.0}) == 0.0);

  const auto r = random_targets(60, 22);
  const auto f = fit_gmrf(x, r);
  std::vector<std::size_t> perm(60);
  for (std::size_t i = 0; i < 60; ++i) perm[i] = (i * 37) % 60;
  std::vector<Point> xp;
  std::vector<double> rp;
  for (auto i : perm) {
    xp.push_back(x[i]);
    rp.push_back(r[i]);
  }
  const auto g = fit_gmrf(xp, rp);
  CHECK((std::get<GmrfModel>(f.model()).effects - std::get<GmrfModel>(g.model()).effects).cwiseAbs().maxCoeff() <=
        1e-12);
  const auto box = BoundingBox::of(x);
  CHECK(f.predict({box.lo[0] - 5.0, box.lo[1] - 5.0}) == f.predict(box.lo));

  GmrfParams bad;
  bad.rho = 1.0;
  CHECK_THROWS_AS(fit_gmrf(x, r, bad), InvalidArgument);
}

// ================================================================= interface

TEST_CASE("every learner: finite, bounded, deterministic predictions") {
  const auto x = random_points(120, 77);
  const auto y = random_targets(120, 78);
  const double ymax = std::abs(*std::max_element(y.begin(), y.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  }));
  for (auto kind : {LearnerKind::none, LearnerKind::tree, LearnerKind::svr, LearnerKind::lowrank_gp,
                    LearnerKind::gmrf}) {
    CAPTURE(to_string(kind));
    const LearnerSpec spec{kind, {}};
    const auto f = fit(spec, x, y);
    CHECK(f.kind() == kind);
    const auto p = predict(f, x);
    double mean_abs = 0.0;
    for (double v : p) {
      CHECK(std::isfinite(v));
      mean_abs += std::abs(v);
    }
    mean_abs /= static_cast<double>(p.size());
    CHECK(mean_abs <= ymax + 1e-9);
    const auto again = predict(fit(spec, x, y), x);
    CHECK(again == p);
    const std::vector<Point> far = {{-100.0, 3.0}, {1e6, -1e6}};
    for (double v : predict(f, far)) CHECK(std::isfinite(v));
    const std::vector<Point> bad = {{std::nan(""), 0.0}};
    CHECK_THROWS_AS(predict(f, bad), InvalidArgument);
  }
}

TEST_CASE("bound learners reproduce the one-shot fits") {
  const auto x = random_points(50, 3);
  const auto y1 = random_targets(50, 4);
  const auto y2 = random_targets(50, 5);
  for (auto kind : {LearnerKind::tree, LearnerKind::svr, LearnerKind::lowrank_gp, LearnerKind::gmrf}) {
    const LearnerSpec spec{kind, {}};
    const auto bound = bind_learner(spec, x);
    for (const auto* y : {&y1, &y2}) {
      CHECK(predict(bound->fit(*y), x) == predict(fit(spec, x, *y), x));
    }
    CHECK_THROWS_AS(bound->fit(std::vector<double>(49, 0.0)), ShapeError);
  }
}

TEST_CASE("learner kind names") {
  CHECK(parse_learner_kind("gp") == LearnerKind::lowrank_gp);
  CHECK(parse_learner_kind("lowrank_gp") == LearnerKind::lowrank_gp);
  CHECK(to_string(LearnerKind::gmrf) == "gmrf");
  CHECK_THROWS_AS(parse_learner_kind("forest"), InvalidArgument);
  CHECK_THROWS_AS(validate(LearnerSpec{LearnerKind::none, {{"x", 1.0}}}), InvalidArgument);
}

TEST_CASE("car_precision structure") {
  const auto Q = Eigen::MatrixXd(car_precision(3, 2, 0.5, 2.0));
  CHECK(Q(0, 0) == 4.0);  // corner, two neighbours
  CHECK(Q(1, 1) == 6.0);  // edge, three neighbours
  CHECK(Q(0, 1) == -1.0);
  CHECK(Q(0, 4) == 0.0);
  CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() == 0.0);
}
