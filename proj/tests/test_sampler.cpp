#include <doctest.h>

#include <cmath>
#include <memory>

#include "shieldmpc/controller.hpp"
#include "shieldmpc/random.hpp"
#include "shieldmpc/sampler.hpp"
#include "shieldmpc/theory.hpp"

using namespace shieldmpc;

namespace {

GaussianPolicy policy_1d(int horizon, double var, double mean = 0.0) {
  return GaussianPolicy(ControlSequence::Constant(horizon, 1, mean),
                        Eigen::VectorXd::Constant(1, var));
}

ControlSequence seq(std::initializer_list<double> v) {
  ControlSequence u(static_cast<int>(v.size()), 1);
  int k = 0;
  for (double x : v) u(k++, 0) = x;
  return u;
}

// Every state costs nothing; the weights are then flat.
class FlatEnv final : public Environment {
 public:
  std::string name() const override { return "flat"; }
  int state_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  Control lower_bounds() const override { return Control::Constant(1, -10.0); }
  Control upper_bounds() const override { return Control::Constant(1, 10.0); }
  State step(const State& x, const Control&) const override { return x; }
  double avoid_heuristic(const State&) const override { return -1.0; }
  State initial_state() const override { return State::Zero(1); }
  State sample_state(StreamRng&) const override { return State::Zero(1); }
  Control backup_action(const State&) const override { return Control::Zero(1); }
};

CostSpec flat_cost() {
  CostSpec c;
  c.quadratic = {Eigen::VectorXd::Zero(1), State::Zero(1)};
  return c;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("sampling is reproducible and centered") {
  const auto p = policy_1d(3, 0.25, 0.4);
  const auto a = sample_controls(p, 10, 5);
  const auto b = sample_controls(p, 10, 5);
  for (int i = 0; i < 10; ++i) CHECK(a[i] == b[i]);

  const auto tiny = sample_controls(policy_1d(3, 1e-30, 0.4), 5, 1);
  for (const auto& u : tiny) CHECK((u.array() - 0.4).abs().maxCoeff() < 1e-12);

  const auto clamped = sample_controls(policy_1d(3, 1e-30, 4.0), 5, 1,
                                       Control::Constant(1, -1.0), Control::Constant(1, 1.0));
  for (const auto& u : clamped) CHECK((u.array() == 1.0).all());

  const int n = 100000;
  const auto eps = sample_noise(policy_1d(2, 0.25), n, 3);
  for (int k = 0; k < 2; ++k) {
    double s = 0.0;
    for (const auto& e : eps) s += e(k, 0);
    CHECK(std::abs(s / n) < 4.0 * 0.5 / std::sqrt(double(n)));
  }
  CHECK_THROWS_AS(GaussianPolicy(ControlSequence::Zero(2, 1), Eigen::VectorXd::Zero(1)),
                  ConfigError);
}

TEST_CASE("snis estimate") {
  std::vector<ControlSequence> u = {seq({1.0, -2.0}), seq({3.0, 4.0}), seq({0.0, 0.0})};
  const auto avg = snis_estimate({u[0], u[1]}, Eigen::Vector2d(2.0, 2.0));
  CHECK(avg(0, 0) == doctest::Approx(2.0));
  CHECK(avg(1, 0) == doctest::Approx(1.0));
  const auto hot = snis_estimate(u, Eigen::Vector3d(0.0, 1.0, 0.0));
  CHECK(hot == u[1]);
  StreamRng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Vector3d w(rng.uniform(), rng.uniform(), rng.uniform());
    const auto v = snis_estimate(u, w);
    for (int k = 0; k < 2; ++k) {
      const double lo = std::min({u[0](k, 0), u[1](k, 0), u[2](k, 0)});
      const double hi = std::max({u[0](k, 0), u[1](k, 0), u[2](k, 0)});
      CHECK(v(k, 0) >= lo - 1e-12);
      CHECK(v(k, 0) <= hi + 1e-12);
    }
  }
  CHECK_THROWS_AS(normalize_weights(Eigen::Vector2d::Zero()), DegenerateEnsemble);
}

TEST_CASE("mppi weights") {
  const auto p = policy_1d(2, 0.5);
  std::vector<ControlSequence> u = {seq({1.0, 0.0}), seq({-1.0, 2.0}), seq({0.3, 0.3})};
  const Eigen::Vector3d cost(1.0, 2.0, 4.0);
  const Eigen::VectorXd w = mppi_weights(u, cost, p, 2.0);
  // zero mean: the cross term vanishes
  CHECK(w[1] / w[0] == doctest::Approx(std::exp(-0.5)));
  CHECK(w[2] / w[0] == doctest::Approx(std::exp(-1.5)));
  CHECK(w.maxCoeff() == 1.0);

  const Eigen::VectorXd eq = normalize_weights(mppi_weights({u[0], u[0]}, Eigen::Vector2d(3, 3), p, 1.0));
  CHECK(eq[0] == doctest::Approx(0.5));
  CHECK(eq[1] == doctest::Approx(0.5));

  const Eigen::VectorXd inf = mppi_weights(u, Eigen::Vector3d(1.0, INFINITY, 2.0), p, 1.0);
  CHECK(inf[1] == 0.0);

  // general VI weight with p0 = q_0 and r = q_vbar agrees after normalizing
  const auto shifted = policy_1d(2, 0.5, 0.7);
  const Eigen::VectorXd a = normalize_weights(mppi_weights(u, cost, shifted, 2.0));
  const Eigen::VectorXd b = normalize_weights(vi_weights(u, cost, policy_1d(2, 0.5), shifted, 2.0));
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(mppi_reduction_check(1000, 17) < 1e-10);
}

TEST_CASE("cem weights") {
  const Eigen::Vector3d c(3.0, 1.0, 2.0);
  CHECK(cem_weights(c, 2) == Eigen::Vector3d(0.0, 1.0, 1.0));
  CHECK(cem_weights(c, 3) == Eigen::Vector3d::Ones());
  CHECK(cem_weights(c, 1) == Eigen::Vector3d(0.0, 1.0, 0.0));
  CHECK(cem_weights(Eigen::Vector3d(1.0, 1.0, 1.0), 2) == Eigen::Vector3d(1.0, 1.0, 0.0));
  CHECK_THROWS_AS(cem_weights(c, 0), ConfigError);
  CHECK_THROWS_AS(cem_weights(c, 4), ConfigError);
}

TEST_CASE("ess") {
  CHECK(ess(Eigen::VectorXd::Ones(7)) == doctest::Approx(7.0));
  CHECK(ess(Eigen::Vector4d(0, 0, 3, 0)) == doctest::Approx(1.0));
  bool normalized = false;
  CHECK(ess(Eigen::Vector4d(0.5, 0.5, 0, 0), &normalized) == doctest::Approx(2.0));
  CHECK(normalized);
  ess(Eigen::Vector2d(2, 2), &normalized);
  CHECK_FALSE(normalized);

  const auto zero = ess_theorem_check(Eigen::Vector3d(1, 0, 2), Eigen::Vector3d::Zero());
  CHECK(zero.premise);
  CHECK(zero.ess_after == doctest::Approx(zero.ess_before));
  const auto two = ess_theorem_check(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1));
  CHECK(two.premise);
  CHECK(two.ess_before == doctest::Approx(1.0));
  CHECK(two.ess_after == doctest::Approx(2.0));
  const auto rep = ess_random_trials(2000, 5);
  CHECK(rep.violations == 0);
  CHECK(rep.premise_held > 0);
}

TEST_CASE("rbr without unsafe particles equals plain rollouts") {
  UnitBoxToyEnv toy;
  std::vector<ControlSequence> u = {seq({0.1, 0.2, 0.3}), seq({0.9, 0.5, 0.0})};
  const auto ens = rollout_rbr(toy, toy.initial_state(), u, SafetySpec{}, 1);
  CHECK(ens.rewires.empty());
  for (int i = 0; i < 2; ++i) {
    CHECK(ens.controls[i] == u[i]);
    CHECK(ens.trajectories[i] == rollout(toy, toy.initial_state(), u[i]));
    CHECK((ens.particle_weights.row(i).array() == 1).all());
  }
}

TEST_CASE("an unsafe particle inherits a safe prefix and keeps its own tail") {
  UnitBoxToyEnv toy;
  std::vector<ControlSequence> u = {seq({-0.5, 0.3, 0.7}), seq({0.2, 0.4, 0.6})};
  const auto ens = rollout_rbr(toy, toy.initial_state(), u, SafetySpec{}, 1);
  REQUIRE(ens.rewires.size() == 1);
  CHECK(ens.rewires[0].step == 1);
  CHECK(ens.rewires[0].target == 0);
  CHECK(ens.rewires[0].source == 1);
  CHECK(ens.controls[0](0, 0) == 0.2);
  CHECK(ens.controls[0](1, 0) == 0.3);
  CHECK(ens.controls[0](2, 0) == 0.7);
  CHECK(ens.trajectories[0] == rollout(toy, toy.initial_state(), ens.controls[0]));
  CHECK((ens.particle_weights.row(0).array() == 1).all());

  const auto plain = rollout_rbr(toy, toy.initial_state(), u, SafetySpec{}, 1, false);
  CHECK(plain.rewires.empty());
  CHECK(plain.particle_weights(0, 1) == 0);
}

TEST_CASE("rewiring log replays to the stored trajectories") {
  UnitBoxToyEnv toy;
  const int horizon = 3, n = 4;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto u = sample_controls(policy_1d(horizon, 1.0 / 3.0), n, seed,
                                   toy.lower_bounds(), toy.upper_bounds());
    const auto ens = rollout_rbr(toy, toy.initial_state(), u, SafetySpec{}, seed);
    for (int i = 0; i < n; ++i) {
      CHECK(ens.trajectories[i] == rollout(toy, toy.initial_state(), ens.controls[i]));
      // surviving prefixes are nonnegative except possibly the final step
      if (ens.particle_weights(i, horizon) == 1 || ens.degenerate_steps == 0) {
        for (int k = 0; k + 1 < horizon; ++k) {
          if (ens.particle_weights(i, k + 1) == 1) CHECK(ens.controls[i](k, 0) >= 0.0);
        }
      }
    }
    // replay: start from the raw samples and apply the log in order
    std::vector<ControlSequence> replay = u;
    for (const auto& ev : ens.rewires) {
      replay[ev.target].topRows(ev.step) = replay[ev.source].topRows(ev.step);
    }
    for (int i = 0; i < n; ++i) CHECK(replay[i] == ens.controls[i]);
  }
}

TEST_CASE("rewired marginal matches the conditional") {
  const auto r = rewire_marginal_test(-1.0, 1.0, 0.0, 1.0, 20000, 3);
  CHECK(r.ks_statistic < r.ks_critical);
  CHECK(r.ks_exact < r.ks_exact_critical);
  const double se = std::sqrt(1.0 / 12.0 / 20000.0);
  CHECK(std::abs(r.rewired_mean - 0.5) < 3.0 * se);
  const auto full = rewire_marginal_test(-1.0, 1.0, -1.0, 1.0, 1000, 3);
  CHECK(full.ks_statistic < full.ks_critical);
  CHECK(full.ks_exact < full.ks_exact_critical);
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample({0, 0}, {1, 1}) == 1.0);
}

TEST_CASE("variance law of the plain estimator") {
  CHECK(no_rbr_variance(4, 1000) == doctest::Approx(5.083333e-3).epsilon(1e-6));
  CHECK(no_rbr_variance(1, 10) == doctest::Approx((2.0 / 3 - 0.25) / 10));
  const auto v = variance_experiment(1, 50, 20000, false, 8);
  CHECK(std::abs(v.variance[0] / no_rbr_variance(1, 50) - 1.0) < 0.1);
  const auto r = variance_experiment(10, 16, 3000, true, 8);
  CHECK(r.variance.maxCoeff() <= rbr_variance_bound(10, 16));
  CHECK(r.variance.maxCoeff() <= no_rbr_variance(10, 16) / 10.0);
}

TEST_CASE("convexity lemma") {
  const auto rep = convexity_lemma_test(500, 64, 9);
  CHECK(rep.estimate_inside == rep.trials);
  CHECK(rep.exact_mean_inside == rep.trials);
  CHECK_FALSE(rep.nonconvex_inside);
  CHECK(std::abs(rep.nonconvex_estimate) < 0.5);
}

}  // TEST_SUITE

TEST_SUITE("controller") {

TEST_CASE("flat costs leave the mean where it was") {
  auto env = std::make_shared<FlatEnv>();
  ControllerSpec spec;
  spec.horizon = 4;
  spec.samples = 4000;
  spec.noise_std = Eigen::VectorXd::Constant(1, 1.0);
  spec.control_cost_weight = 0.0;
  const auto out = controller_step(*env, State::Zero(1), policy_1d(4, 1.0), spec,
                                   flat_cost(), nullptr, 0);
  CHECK(out.ess == doctest::Approx(4000.0));
  CHECK(out.next_policy.mean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(4000.0));
}

TEST_CASE("a single sample is its own estimate") {
  auto env = std::make_shared<FlatEnv>();
  ControllerSpec spec;
  spec.horizon = 3;
  spec.samples = 1;
  spec.noise_std = Eigen::VectorXd::Constant(1, 0.5);
  spec.seed = 4;
  WeightedEnsemble ens;
  const auto out = controller_step(*env, State::Zero(1), policy_1d(3, 0.25), spec,
                                   flat_cost(), nullptr, 0, &ens);
  REQUIRE(ens.size() == 1);
  // the returned mean is already shifted one step, last control repeated
  const auto& u = ens.controls[0];
  CHECK(out.next_policy.mean.topRows(2) == u.bottomRows(2));
  CHECK(out.next_policy.mean.row(2) == u.row(2));
  CHECK(out.action == ens.controls[0].row(0).transpose());
}

TEST_CASE("controller is reproducible and shifts the mean") {
  auto env = std::make_shared<DoubleIntegratorEnv>();
  ControllerSpec spec;
  spec.horizon = 5;
  spec.samples = 50;
  spec.noise_std = Eigen::VectorXd::Constant(1, 0.5);
  spec.seed = 77;
  CostSpec cost;
  cost.quadratic = {Eigen::VectorXd::Ones(2), (State(2) << 0.5, 0.0).finished()};
  cost.collision = true;
  Controller a(env, spec, cost, nullptr), b(env, spec, cost, nullptr);
  State x = State::Zero(2);
  for (int i = 0; i < 5; ++i) {
    const auto oa = a.step(x), ob = b.step(x);
    CHECK(oa.action == ob.action);
    x = env->step(x, oa.action);
  }
  a.reset();
  Controller c(env, spec, cost, nullptr);
  CHECK(a.step(State::Zero(2)).action == c.step(State::Zero(2)).action);
}

TEST_CASE("algorithm names") {
  for (auto alg : {Algorithm::kMppi, Algorithm::kCem, Algorithm::kShieldMppi, Algorithm::kNsMppi}) {
    CHECK(parse_algorithm(to_string(alg)) == alg);
  }
  CHECK(parse_algorithm("s-mppi") == Algorithm::kShieldMppi);
  CHECK_THROWS_AS(parse_algorithm("ppo"), ConfigError);
  const CostSpec m = default_cost_terms(Algorithm::kMppi, CostSpec{});
  CHECK(m.collision);
  CHECK_FALSE(m.cbf);
  const CostSpec s = default_cost_terms(Algorithm::kNsMppi, CostSpec{});
  CHECK(s.cbf);
  CHECK_FALSE(s.collision);
}

TEST_CASE("spec validation") {
  ControllerSpec spec;
  spec.noise_std = Eigen::VectorXd::Constant(1, 0.5);
  CHECK_NOTHROW(spec.validate(1));
  spec.lambda = 0.0;
  CHECK_THROWS_AS(spec.validate(1), ConfigError);
  spec.lambda = 1.0;
  spec.cem_elite_k = spec.samples + 1;
  spec.algorithm = Algorithm::kCem;
  CHECK_THROWS_AS(spec.validate(1), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("sampler") {

TEST_CASE("normalized weights sum to one") {
  StreamRng rng(12);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd w(20);
    for (int i = 0; i < 20; ++i) w[i] = std::exp(40.0 * rng.normal());
    w[t % 20] = 0.0;
    CHECK(std::abs(normalize_weights(w).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("no safe particle means no rewiring from then on") {
  UnitBoxToyEnv toy;
  std::vector<ControlSequence> u = {seq({-0.5, 0.3, 0.7}), seq({-0.2, 0.4, 0.6}),
                                    seq({-0.9, -0.4, 0.1})};
  const auto ens = rollout_rbr(toy, toy.initial_state(), u, SafetySpec{}, 3);
  CHECK(ens.rewires.empty());
  CHECK(ens.degenerate_steps > 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(ens.controls[i] == u[i]);
    CHECK(ens.trajectories[i] == rollout(toy, toy.initial_state(), u[i]));
  }
}

}  // TEST_SUITE
