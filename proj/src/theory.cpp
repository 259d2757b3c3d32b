#include "shieldmpc/theory.hpp"

#include <algorithm>
#include <cmath>

#include "shieldmpc/random.hpp"
#include "shieldmpc/sampler.hpp"

namespace shieldmpc {
namespace {

// Asymptotic Kolmogorov-Smirnov constant c(alpha) for alpha = 0.01.
constexpr double kKsC01 = 1.628;

}  // namespace

State UnitBoxToyEnv::step(const State& x, const Control& u) const {
  const double v = u[0];
  const bool inside = x[0] > 0.5 && v >= 0.0 && v <= 1.0;
  return State::Constant(1, inside ? 1.0 : 0.0);
}

double no_rbr_variance(int horizon, int samples) {
  return (std::pow(2.0, horizon) / 3.0 - 0.25) / samples;
}

double rbr_variance_bound(int horizon, int samples) {
  const double q = 1.0 - std::pow(2.0, -samples);
  return 1.25 * std::pow(1.0 / q, horizon - 1) + 0.25 * std::pow(q, horizon - 1) - 0.75;
}

VarianceResult variance_experiment(int horizon, int samples, int n_reps,
                                   bool use_rbr, std::uint64_t seed) {
  if (horizon < 1 || samples < 1 || n_reps < 2) {
    throw ConfigError("variance_experiment: need K >= 1, N >= 1, reps >= 2");
  }
  Eigen::MatrixXd est(n_reps, horizon);
  const UnitBoxToyEnv toy;
  const double t = std::pow(2.0, -samples);
  const double rbr_scale = 1.0 / (0.5 * std::pow(1.0 - t, horizon - 1));
  const double is_weight = std::pow(2.0, horizon);

  std::vector<ControlSequence> particles(samples, ControlSequence(horizon, 1));
  Eigen::VectorXd acc(horizon);
  for (int rep = 0; rep < n_reps; ++rep) {
    acc.setZero();
    for (int i = 0; i < samples; ++i) {
      StreamRng rng(seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(i));
      for (int k = 0; k < horizon; ++k) particles[i](k, 0) = 2.0 * rng.uniform() - 1.0;
    }
    if (!use_rbr) {
      for (const auto& u : particles) {
        if ((u.array() >= 0.0).all() && (u.array() <= 1.0).all()) {
          acc += is_weight * u.col(0);
        }
      }
    } else {
      const WeightedEnsemble ens =
          rollout_rbr(toy, toy.initial_state(), particles, SafetySpec{},
                      mix64(seed ^ mix64(static_cast<std::uint64_t>(rep) + 1)));
      for (int i = 0; i < samples; ++i) {
        if (ens.trajectories[i](horizon, 0) > 0.5) acc += rbr_scale * ens.controls[i].col(0);
      }
    }
    est.row(rep) = (acc / samples).transpose();
  }

  VarianceResult out;
  out.reps = n_reps;
  out.mean = est.colwise().mean().transpose();
  out.variance =
      ((est.rowwise() - out.mean.transpose()).array().square().colwise().sum() /
       (n_reps - 1)).transpose();
  return out;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

MarginalTestResult rewire_marginal_test(double lo, double hi, double s_lo,
                                        double s_hi, int n_samples,
                                        std::uint64_t seed) {
  if (!(lo < hi) || !(lo <= s_lo && s_lo < s_hi && s_hi <= hi) || n_samples < 1) {
    throw ConfigError("rewire_marginal_test: need lo <= s_lo < s_hi <= hi");
  }
  MarginalTestResult r;
  r.conditional.reserve(n_samples);
  r.rewired.reserve(n_samples);
  StreamRng rng(seed, 0x6d617267);
  for (int i = 0; i < n_samples; ++i) {
    const double a = s_lo + (s_hi - s_lo) * rng.uniform();
    const double b = lo + (hi - lo) * rng.uniform();
    r.conditional.push_back(a);
    r.rewired.push_back(b >= s_lo && b <= s_hi ? b : a);
  }
  const double n = n_samples;
  r.ks_statistic = ks_two_sample(r.conditional, r.rewired);
  r.ks_critical = kKsC01 * std::sqrt(2.0 / n);

  std::vector<double> sorted = r.rewired;
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double cdf = std::clamp((sorted[i] - s_lo) / (s_hi - s_lo), 0.0, 1.0);
    d = std::max({d, std::abs((i + 1) / n - cdf), std::abs(cdf - i / n)});
  }
  r.ks_exact = d;
  r.ks_exact_critical = kKsC01 / std::sqrt(n);
  double sum = 0.0;
  for (double v : r.rewired) sum += v;
  r.rewired_mean = sum / n;
  return r;
}

EssCheck ess_theorem_check(const Eigen::VectorXd& w, const Eigen::VectorXd& c) {
  if (w.size() != c.size() || w.size() < 2) throw ConfigError("ess_theorem_check: size mismatch");
  if ((w.array() < 0.0).any() || (c.array() < 0.0).any() || !(w.sum() > 0.0)) {
    throw ConfigError("ess_theorem_check: weights must be non-negative and not all zero");
  }
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0 && c[i] != 0.0) {
      throw ConfigError("ess_theorem_check: c may only fill zero entries of w");
    }
  }
  const double n = static_cast<double>(w.size());
  EssCheck r;
  r.ess_before = ess(w);
  r.ess_after = ess(w + c);
  r.premise = c.sum() <= 2.0 * n / (n - 1.0) * w.squaredNorm() / w.sum();
  // Relative slack only absorbs rounding when the two sides tie (c = 0).
  r.ordered = !r.premise || r.ess_after >= r.ess_before * (1.0 - 1e-12);
  return r;
}

EssTrialReport ess_random_trials(int trials, std::uint64_t seed) {
  EssTrialReport rep;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng(seed, 0x657373, static_cast<std::uint64_t>(t));
    const int n = 2 + static_cast<int>(rng() % 63);
    const int nonzero = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    const double shape = 0.2 + 2.8 * rng.uniform();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n), c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < nonzero; ++i) w[i] = std::pow(-std::log(1.0 - rng.uniform()), shape);
    if (!(w.sum() > 0.0)) w[0] = 1.0;
    for (int i = nonzero; i < n; ++i) c[i] = std::pow(-std::log(1.0 - rng.uniform()), shape);
    const double bound = 2.0 * n / (n - 1.0) * w.squaredNorm() / w.sum();
    if (c.sum() > 0.0) c *= bound / c.sum() * std::pow(rng.uniform(), 0.3);
    const EssCheck r = ess_theorem_check(w, c);
    ++rep.trials;
    if (r.premise) ++rep.premise_held;
    if (!r.ordered) ++rep.violations;
  }
  return rep;
}

ConvexityReport convexity_lemma_test(int trials, int samples,
                                     std::uint64_t seed) {
  ConvexityReport rep;
  std::vector<ControlSequence> u(samples, ControlSequence(1, 1));
  Eigen::VectorXd w(samples);
  for (int t = 0; t < trials; ++t) {
    StreamRng rng(seed, 0x636f6e76, static_cast<std::uint64_t>(t));
    double a = 2.0 * rng.uniform() - 1.0, b = 2.0 * rng.uniform() - 1.0;
    if (a > b) std::swap(a, b);
    if (b - a < 1e-3) b = std::min(1.0, a + 1e-3);
    // Proposal U[-1, 1]; the posterior is uniform on [a, b]. At least one
    // sample is placed inside so the ensemble is never degenerate.
    for (int i = 0; i < samples; ++i) {
      u[i](0, 0) = (i == 0) ? a + (b - a) * rng.uniform() : 2.0 * rng.uniform() - 1.0;
      w[i] = (u[i](0, 0) >= a && u[i](0, 0) <= b) ? 1.0 : 0.0;
    }
    const double est = snis_estimate(u, w)(0, 0);
    const double exact = 0.5 * (a + b);
    ++rep.trials;
    if (est >= a && est <= b) ++rep.estimate_inside;
    if (exact >= a && exact <= b) ++rep.exact_mean_inside;
  }
  // Symmetric posterior on a non-convex set.
  StreamRng rng(seed, 0x6e6f6e63);
  for (int i = 0; i < samples; ++i) {
    const double v = 2.0 * rng.uniform() - 1.0;
    u[i](0, 0) = v;
    w[i] = std::abs(v) >= 0.5 ? 1.0 : 0.0;
  }
  try {
    rep.nonconvex_estimate = snis_estimate(u, w)(0, 0);
  } catch (const DegenerateEnsemble&) {
    rep.nonconvex_estimate = 0.0;
  }
  rep.nonconvex_inside = std::abs(rep.nonconvex_estimate) >= 0.5;
  return rep;
}

double mppi_reduction_check(int instances, std::uint64_t seed) {
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    StreamRng rng(seed, 0x7265647563, static_cast<std::uint64_t>(t));
    const int horizon = 1 + static_cast<int>(rng() % 8);
    const int n_u = 1 + static_cast<int>(rng() % 3);
    const int n = 2 + static_cast<int>(rng() % 30);
    Eigen::VectorXd var(n_u);
    for (int j = 0; j < n_u; ++j) var[j] = 0.05 + 2.0 * rng.uniform();
    ControlSequence vbar(horizon, n_u);
    for (int k = 0; k < horizon; ++k)
      for (int j = 0; j < n_u; ++j) vbar(k, j) = 2.0 * rng.normal();
    const GaussianPolicy proposal(vbar, var);
    const GaussianPolicy prior(ControlSequence::Zero(horizon, n_u), var);
    const auto u = sample_controls(proposal, n, rng());
    Eigen::VectorXd costs(n);
    for (int i = 0; i < n; ++i) costs[i] = 5.0 * rng.uniform();

    const Eigen::VectorXd a = normalize_weights(mppi_weights(u, costs, proposal, 1.0));
    const Eigen::VectorXd b = normalize_weights(vi_weights(u, costs, prior, proposal, 1.0));
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff());
  }
  return worst;
}

Policy QuadraticInvariantSet::policy() const {
  const Eigen::Vector2d k = gains;
  return [k](const State& x) {
    return Control::Constant(1, -k[0] * x[0] - k[1] * x[1]);
  };
}

BarrierFunction QuadraticInvariantSet::barrier() const {
  const Eigen::Matrix2d p = P;
  const double r = rho;
  return BarrierFunction(
      [p, r](const State& x) {
        const Eigen::Vector2d v(x[0], x[1]);
        return v.dot(p * v) / r - 1.0;
      },
      a, BarrierFunction::Source::kHeuristic);
}

QuadraticInvariantSet double_integrator_invariant_set(
    const DoubleIntegratorEnv& env, double a, double k1, double k2) {
  const double dt = env.dt();
  Eigen::Matrix2d acl;
  acl << 1.0, dt, -dt * k1, 1.0 - dt * k2;
  // vec(A^T P A) = (A^T kron A^T) vec(P); solve (A^T kron A^T - (1-a) I) vec P = -vec I.
  Eigen::Matrix4d m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m.block<2, 2>(2 * i, 2 * j) = acl(j, i) * acl.transpose();
  m -= (1.0 - a) * Eigen::Matrix4d::Identity();
  const Eigen::Vector4d rhs = -Eigen::Vector4d(1.0, 0.0, 0.0, 1.0);
  const Eigen::Vector4d vec_p = m.fullPivLu().solve(rhs);
  QuadraticInvariantSet set;
  set.P << vec_p[0], vec_p[2], vec_p[1], vec_p[3];
  set.P = 0.5 * (set.P + set.P.transpose());
  if (set.P.llt().info() != Eigen::Success) {
    throw ConfigError("double_integrator_invariant_set: gains do not contract fast enough");
  }
  set.gains = Eigen::Vector2d(k1, k2);
  set.a = a;
  // max of c.x over {x^T P x <= rho} is sqrt(rho c^T P^-1 c).
  const Eigen::Matrix2d pinv = set.P.inverse();
  const Eigen::Vector2d e1(1.0, 0.0);
  const double rho_pos = env.limit() * env.limit() / e1.dot(pinv * e1);
  const double rho_u = env.u_max() * env.u_max() / set.gains.dot(pinv * set.gains);
  set.rho = std::min(rho_pos, rho_u);
  return set;
}

ValuePropertyReport value_property_check(const Environment& env,
                                         const Policy& policy,
                                         const HeuristicFn& h, double a,
                                         int n_states, int horizon,
                                         std::uint64_t seed) {
  ValuePropertyReport rep;
  for (int i = 0; i < n_states; ++i) {
    StreamRng rng(seed, 0x76616c, static_cast<std::uint64_t>(i));
    const State x0 = env.sample_state(rng);
    const double v0 = policy_value_oracle(x0, policy, env, h, horizon);
    const State x1 = env.step(x0, policy(x0));
    const double v1 = policy_value_oracle(x1, policy, env, h, horizon - 1);
    ++rep.states;
    if (v0 < h(x0)) ++rep.dominance_violations;
    if (v0 < v1) ++rep.monotone_violations;
    if (v0 <= 0.0) {
      ++rep.descent_checked;
      if (descent_residual(v0, v1, a) > 0.0) ++rep.descent_violations;
    }
  }
  return rep;
}

}  // namespace shieldmpc

namespace shieldmpc {

std::vector<CheckOutcome> theory_checks(std::uint64_t seed) {
  std::vector<CheckOutcome> out;
  auto add = [&](std::string name, double value, double threshold, bool pass,
                 std::string detail) {
    out.push_back({std::move(name), value, threshold, pass, std::move(detail)});
  };

  {
    double worst = 0.0;
    for (int k : {2, 4, 6}) {
      const VarianceResult r = variance_experiment(k, 1000, 20000, false, seed + k);
      const double closed = no_rbr_variance(k, 1000);
      for (int j = 0; j < k; ++j) worst = std::max(worst, std::abs(r.variance[j] / closed - 1.0));
    }
    add("variance_law", worst, 0.1, worst < 0.1, "max relative error over K in {2,4,6}");
  }
  {
    const VarianceResult r = variance_experiment(10, 16, 20000, true, seed + 10);
    const double bound = rbr_variance_bound(10, 16);
    const double plain = no_rbr_variance(10, 16);
    const double worst = r.variance.maxCoeff();
    add("rbr_variance", worst, std::min(bound, plain / 10.0),
        worst <= bound && worst <= plain / 10.0, "K=10, N=16, max over coordinates");
  }
  {
    const VarianceResult r = variance_experiment(10, 16, 10000, true, seed + 11);
    double worst = 0.0;
    for (int j = 0; j < 10; ++j) {
      const double se = std::sqrt(r.variance[j] / r.reps);
      worst = std::max(worst, std::abs(r.mean[j] - 0.5) / se);
    }
    add("rbr_unbiased", worst, 4.0, worst <= 4.0, "max |mean - 1/2| in standard errors");
  }
  {
    const MarginalTestResult r = rewire_marginal_test(-1.0, 1.0, 0.0, 1.0, 100000, seed);
    add("rewire_marginal", r.ks_statistic, r.ks_critical,
        r.ks_statistic < r.ks_critical && r.ks_exact < r.ks_exact_critical,
        "two-sample KS, conditional vs rewired");
  }
  {
    const EssTrialReport rep = ess_random_trials(10000, seed);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(8, 1.0 / 8.0);
    Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(8);
    one_hot[3] = 1.0;
    const bool exact = ess(uniform) == 8.0 && ess(one_hot) == 1.0;
    add("ess_theorem", rep.violations, 0.0,
        rep.violations == 0 && rep.premise_held == rep.trials && exact,
        "ordering violations over 10^4 instances");
  }
  {
    const double gap = mppi_reduction_check(1000, seed);
    add("mppi_reduction", gap, 1e-10, gap < 1e-10, "max relative weight gap");
  }
  {
    const ConvexityReport rep = convexity_lemma_test(1000, 64, seed);
    add("convexity_lemma", rep.trials - rep.estimate_inside, 0.0,
        rep.estimate_inside == rep.trials && rep.exact_mean_inside == rep.trials &&
            !rep.nonconvex_inside,
        "estimates outside a convex safe interval");
  }
  {
    const DoubleIntegratorEnv env;
    const QuadraticInvariantSet set = double_integrator_invariant_set(env, 0.1);
    const BarrierFunction b = set.barrier();
    int failures = 0;
    for (int i = 0; i < 100; ++i) {
      StreamRng rng(seed, 0x696e76, static_cast<std::uint64_t>(i));
      State x0 = env.sample_state(rng);
      // Scale into the zero sublevel set.
      const double bx = b(x0);
      if (bx > 0.0) x0 /= std::sqrt((bx + 1.0) * 1.0001);
      const InvarianceReport r = check_forward_invariance(x0, set.policy(), b, env, 200);
      if (!r.bound_holds || !r.stays_nonpositive || r.first_violation >= 0) ++failures;
    }
    add("forward_invariance", failures, 0.0, failures == 0,
        "initial states failing the geometric bound over 200 steps");
  }
  {
    const ScalarOracleEnv oracle;
    const Policy pi = [&oracle](const State& x) { return oracle.backup_action(x); };
    const HeuristicFn h = [&oracle](const State& x) { return oracle.avoid_heuristic(x); };
    const ValuePropertyReport a = value_property_check(oracle, pi, h, 0.1, 1000, 200, seed);
    const DoubleIntegratorEnv di;
    const Policy brake = [&di](const State& x) { return di.backup_action(x); };
    const HeuristicFn hd = [&di](const State& x) { return di.avoid_heuristic(x); };
    const ValuePropertyReport b = value_property_check(di, brake, hd, 0.1, 1000, 200, seed + 1);
    const int bad = a.dominance_violations + a.monotone_violations + a.descent_violations +
                    b.dominance_violations + b.monotone_violations + b.descent_violations;
    add("value_properties", bad, 0.0, bad == 0,
        "violations of V >= h, V(x) >= V(f(x)) and descent over 2x10^3 states");
  }
  return out;
}

}  // namespace shieldmpc
