#include <doctest.h>

#include <memory>
#include <vector>

#include "shieldmpc/cbf.hpp"
#include "shieldmpc/cost.hpp"
#include "shieldmpc/theory.hpp"

using namespace shieldmpc;

namespace {

std::shared_ptr<VehicleEnv> vehicle_env() {
  return std::make_shared<VehicleEnv>(VehicleParams{}, TrackGeometry::default_track());
}

State at_offset(double e_y) {
  return vehicle_rolling_state(5.0, e_y, 0.0, 1.0, VehicleParams{});
}

// B(x) = x[0], so barrier values are whatever the trajectory stores.
BarrierFunction identity_barrier(double a) {
  return BarrierFunction([](const State& x) { return x[0]; }, a,
                         BarrierFunction::Source::kHeuristic);
}

}  // namespace

TEST_SUITE("cost") {

TEST_CASE("stage cost") {
  QuadraticCostSpec spec{Eigen::VectorXd::Ones(3), (State(3) << 1, 2, 3).finished()};
  CHECK(stage_cost(spec.target, spec) == 0.0);
  QuadraticCostSpec zero{Eigen::VectorXd::Zero(3), State::Zero(3)};
  CHECK(stage_cost((State(3) << 5, -4, 9).finished(), zero) == 0.0);
  QuadraticCostSpec one{(Eigen::VectorXd(3) << 1, 0, 0).finished(), State::Zero(3)};
  CHECK(stage_cost((State(3) << 2, 7, -1).finished(), one) == doctest::Approx(4.0));
  QuadraticCostSpec neg{(Eigen::VectorXd(3) << -1, 0, 0).finished(), State::Zero(3)};
  CHECK_THROWS_AS(neg.validate(3), ConfigError);
}

TEST_CASE("collision cost on the track") {
  auto env = vehicle_env();
  CHECK(collision_cost(at_offset(0.0), *env, 1e4) == 0.0);
  CHECK(collision_cost(at_offset(3.0), *env, 1e4) == 1e4);
  CHECK(collision_cost(at_offset(1.5), *env, 1e4) == 0.0);
}

TEST_CASE("cbf penalty") {
  const std::vector<double> fine = {-1.0, -1.0, -0.95, -0.9};
  CHECK(cbf_penalty(fine, 0.1, 1e3, PenaltyMode::kHinge) == 0.0);
  // residual = b1 - b0 + a b0 = -0.2 + 0.5 * 1 ... chosen to give 0.3
  const std::vector<double> one_step = {-1.0, -0.2};
  CHECK(descent_residual(-1.0, -0.2, 0.5) == doctest::Approx(0.3));
  CHECK(cbf_penalty(one_step, 0.5, 1e3, PenaltyMode::kHinge) == doctest::Approx(300.0));
  CHECK(cbf_penalty(one_step, 0.5, 1e3, PenaltyMode::kIndicator) == doctest::Approx(1e3));
  CHECK(cbf_penalty(one_step, 0.5, 1e3, PenaltyMode::kBoth) == doctest::Approx(1300.0));

  Trajectory tr(2, 1);
  tr << -1.0, -0.2;
  CHECK(cbf_penalty(tr, identity_barrier(0.5), 10.0, PenaltyMode::kHinge) ==
        doctest::Approx(3.0));
}

TEST_CASE("total cost") {
  DoubleIntegratorEnv di;
  CostSpec spec;
  spec.quadratic = {Eigen::VectorXd::Ones(2), (State(2) << 0.3, 0.0).finished()};
  Trajectory at_goal(4, 2);
  at_goal.rowwise() = spec.quadratic.target.transpose();
  CHECK(total_cost(at_goal, spec, di) == 0.0);

  // one step: stage cost of x_1 plus the x_0 -> x_1 penalty
  spec.cbf = true;
  Trajectory tr(2, 2);
  tr << -1.0, 0.0,
        -0.2, 0.0;
  const auto b = identity_barrier(0.5);
  const double expect = stage_cost(tr.row(1).transpose(), spec.quadratic) +
                        spec.penalty.cbf_weight * 0.3;
  CHECK(total_cost(tr, spec, di, &b) == doctest::Approx(expect));
  CHECK_THROWS_AS(total_cost(tr, spec, di, nullptr), ConfigError);
}

TEST_CASE("adversarial mode rewards entering the avoid set") {
  DoubleIntegratorEnv di(0.1, 1.0, 1.0);
  CostSpec spec;
  spec.quadratic = {Eigen::VectorXd::Zero(2), State::Zero(2)};
  spec.collision = true;
  Trajectory safe(3, 2), unsafe(3, 2);
  safe << 0, 0, 0.5, 0, 0.6, 0;
  unsafe << 0, 0, 0.5, 0, 1.5, 0;
  CHECK(total_cost(unsafe, spec, di) > total_cost(safe, spec, di));
  spec.adversarial = true;
  CHECK(total_cost(unsafe, spec, di) < total_cost(safe, spec, di));
  CHECK(total_cost(unsafe, spec, di) == doctest::Approx(-spec.penalty.collision_weight));
}

}  // TEST_SUITE

TEST_SUITE("cbf") {

TEST_CASE("track heuristics") {
  CHECK(h0_track(at_offset(0.0), 1.5) == doctest::Approx(-2.25));
  CHECK(h0_track(at_offset(1.5), 1.5) == 0.0);
  CHECK(h0_track(at_offset(2.0), 1.5) == doctest::Approx(1.75));
  CHECK(h0_track(at_offset(-2.0), 1.5) == doctest::Approx(1.75));

  CHECK(h_modified(at_offset(0.0), 1.5, 1.8) == doctest::Approx(-2.55));
  CHECK(h_modified(at_offset(1.8), 1.5, 1.8) == 2.8);
  CHECK(h_modified(at_offset(-5.0), 1.5, 1.8) == 2.8);
  const double band = h_modified(at_offset(1.5 + 1e-9), 1.5, 1.8);
  CHECK(band > 0.0);
  CHECK(band == doctest::Approx(0.2).epsilon(1e-6));
  // same avoid set as h0 on a fine scan
  for (double e = -2.5; e <= 2.5; e += 0.01) {
    CHECK((h_modified(at_offset(e), 1.5, 1.8) > 0) == (h0_track(at_offset(e), 1.5) > 0));
  }
}

TEST_CASE("descent residual") {
  CHECK(descent_residual(0.0, 0.0, 0.3) == 0.0);
  CHECK(descent_residual(-1.0, -1.0, 0.5) == doctest::Approx(-0.5));
  CHECK(descent_residual(-1.0, 0.0, 0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(identity_barrier(1.0), ConfigError);
  CHECK_THROWS_AS(identity_barrier(0.0), ConfigError);
}

TEST_CASE("heuristic barrier matches the environment") {
  auto env = vehicle_env();
  const auto base = make_heuristic_barrier(env, HeuristicKind::kBase, 0.1);
  const auto mod = make_heuristic_barrier(env, HeuristicKind::kModified, 0.1);
  CHECK(base(at_offset(0.5)) == doctest::Approx(h0_track(at_offset(0.5), 1.5)));
  CHECK(mod(at_offset(0.5)) == doctest::Approx(h_modified(at_offset(0.5), 1.5, 1.8)));
  Trajectory rows(3, vehicle::kStateDim);
  for (int i = 0; i < 3; ++i) rows.row(i) = at_offset(0.6 * i).transpose();
  const Eigen::VectorXd v = mod.evaluate_rows(rows);
  for (int i = 0; i < 3; ++i) CHECK(v[i] == mod(rows.row(i).transpose()));
}

TEST_CASE("forward invariance on the double integrator") {
  DoubleIntegratorEnv di;
  const auto set = double_integrator_invariant_set(di, 0.1);
  const auto b = set.barrier();
  // start on the boundary of the sublevel set
  State x0 = (State(2) << 0.3, -0.2).finished();
  x0 *= 1.0 / std::sqrt(x0.dot(set.P * x0) / set.rho);
  CHECK(b(x0) == doctest::Approx(0.0).epsilon(1e-12));
  const auto rep = check_forward_invariance(x0, set.policy(), b, di, 200);
  CHECK(rep.first_violation == -1);
  CHECK(rep.bound_holds);
  // B(x0) is zero up to rounding
  for (double v : rep.values) CHECK(v <= 1e-12);

  const State inside = 0.5 * x0;
  const auto rep2 = check_forward_invariance(inside, set.policy(), b, di, 200);
  CHECK(rep2.bound_holds);
  for (double r : rep2.residuals) CHECK(r <= 1e-12);
}

TEST_CASE("forward invariance flags the first violating step") {
  DoubleIntegratorEnv di;
  const auto set = double_integrator_invariant_set(di, 0.1);
  const auto good = set.policy();
  int calls = 0;
  // kick hard outward at step 3 only
  const Policy bad = [&](const State& x) {
    return calls++ == 3 ? Control::Constant(1, di.u_max()) : good(x);
  };
  const State x0 = (State(2) << 0.4, 0.6).finished() * 0.3;
  const auto rep = check_forward_invariance(x0, bad, set.barrier(), di, 20);
  CHECK(rep.first_violation == 3);
}

}  // TEST_SUITE

TEST_SUITE("cost") {

TEST_CASE("total cost is nonnegative and grows with violations") {
  DoubleIntegratorEnv di(0.1, 1.0, 1.0);
  CostSpec spec;
  spec.quadratic = {(Eigen::VectorXd(2) << 1.0, 0.1).finished(), State::Zero(2)};
  spec.collision = true;
  spec.cbf = true;
  const auto b = make_heuristic_barrier(std::make_shared<DoubleIntegratorEnv>(di),
                                        HeuristicKind::kBase, 0.1);
  StreamRng rng(5);
  for (int t = 0; t < 200; ++t) {
    Trajectory tr(6, 2);
    for (int i = 0; i < tr.size(); ++i) tr.data()[i] = 1.6 * rng.uniform() - 0.8;
    const double base = total_cost(tr, spec, di, &b);
    CHECK(base >= 0.0);
    // push one state into the avoid set
    Trajectory worse = tr;
    worse(3, 0) = 1.5;
    CHECK(total_cost(worse, spec, di, &b) >= base);
  }
}

TEST_CASE("a trajectory touching the avoid set gets negligible weight") {
  DoubleIntegratorEnv di(0.1, 1.0, 1.0);
  CostSpec spec;
  spec.quadratic = {Eigen::VectorXd::Ones(2), State::Zero(2)};
  spec.collision = true;
  Trajectory tr(3, 2);
  tr << 0.1, 0.2, 0.3, 0.1, 1.2, 0.0;
  const double j = total_cost(tr, spec, di);
  CHECK(j >= 1e4);
  CHECK(std::exp(-j) < 1e-300);
}

}  // TEST_SUITE
