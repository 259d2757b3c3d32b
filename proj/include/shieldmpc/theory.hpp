#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shieldmpc/cbf.hpp"
#include "shieldmpc/environment.hpp"
#include "shieldmpc/valuefn.hpp"

namespace shieldmpc {

// Toy problem for the variance results: controls in [-1, 1], a prefix is
// safe while every control so far lies in [0, 1]. State = [1] while safe,
// [0] after leaving.
class UnitBoxToyEnv final : public Environment {
 public:
  std::string name() const override { return "unit_box_toy"; }
  int state_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  Control lower_bounds() const override { return Control::Constant(1, -1.0); }
  Control upper_bounds() const override { return Control::Constant(1, 1.0); }
  State step(const State& x, const Control& u) const override;
  double avoid_heuristic(const State& x) const override {
    return x[0] > 0.5 ? -1.0 : 1.0;
  }
  State initial_state() const override { return State::Ones(1); }
  State sample_state(StreamRng&) const override { return State::Ones(1); }
  Control backup_action(const State&) const override {
    return Control::Constant(1, 0.5);
  }
};

// (1/N)(2^K/3 - 1/4): variance of the plain importance-sampling estimator.
double no_rbr_variance(int horizon, int samples);
// (5/4)(1/(1-t))^(K-1) + (1/4)(1-t)^(K-1) - 3/4 with t = 2^-N.
double rbr_variance_bound(int horizon, int samples);

struct VarianceResult {
  Eigen::VectorXd mean;      // per coordinate, over reps
  Eigen::VectorXd variance;  // unbiased sample variance per coordinate
  int reps = 0;
};

// Runs n_reps independent estimators of the posterior mean (1/2 per
// coordinate). Without RBR: (1/N) sum 2^K 1{u in [0,1]^K} u_k. With RBR:
// (1/N) sum 1{u~ in [0,1]^K} u~_k / ((1/2)(1-t)^(K-1)).
VarianceResult variance_experiment(int horizon, int samples, int n_reps,
                                   bool use_rbr, std::uint64_t seed);

struct MarginalTestResult {
  std::vector<double> conditional;  // a ~ f(. | S)
  std::vector<double> rewired;      // b~ = b if b in S else a
  double ks_statistic = 0.0;        // two-sample, conditional vs rewired
  double ks_critical = 0.0;         // 1% two-sample critical value
  double ks_exact = 0.0;            // one-sample, rewired vs exact CDF of f(.|S)
  double ks_exact_critical = 0.0;   // 1% one-sample critical value
  double rewired_mean = 0.0;
};

// f = U[lo, hi], S = [s_lo, s_hi] inside it.
MarginalTestResult rewire_marginal_test(double lo, double hi, double s_lo,
                                        double s_hi, int n_samples,
                                        std::uint64_t seed);

double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct EssCheck {
  double ess_before = 0.0;
  double ess_after = 0.0;
  bool premise = false;  // ||c||_1 <= 2 N/(N-1) ||w||_2^2 / ||w||_1
  bool ordered = true;   // ess_after >= ess_before (checked under the premise)
};

// `c` adds weight only where `w` is zero.
EssCheck ess_theorem_check(const Eigen::VectorXd& w, const Eigen::VectorXd& c);

struct EssTrialReport {
  int trials = 0;
  int premise_held = 0;
  int violations = 0;
};
EssTrialReport ess_random_trials(int trials, std::uint64_t seed);

struct ConvexityReport {
  int trials = 0;
  int estimate_inside = 0;        // SNIS estimate within the interval
  int exact_mean_inside = 0;      // conditional mean within the interval
  double nonconvex_estimate = 0;  // SNIS estimate for [-1,-.5] u [.5,1]
  bool nonconvex_inside = false;
};
ConvexityReport convexity_lemma_test(int trials, int samples,
                                     std::uint64_t seed);

// Max over random instances of the relative gap between normalized general
// VI weights (p0 = q_0, r = q_vbar) and normalized MPPI weights.
double mppi_reduction_check(int instances, std::uint64_t seed);

// Linear feedback u = -k1 p - k2 v on the double integrator with the
// quadratic barrier B(x) = x^T P x / rho - 1, where P solves
// A_cl^T P A_cl = (1 - a) P - I and rho keeps the sublevel set inside
// |p| <= limit and |u| <= u_max. Every step then satisfies the descent
// condition.
struct QuadraticInvariantSet {
  Eigen::Matrix2d P;
  double rho = 1.0;
  Eigen::Vector2d gains;
  double a = 0.1;

  Policy policy() const;
  BarrierFunction barrier() const;
};
QuadraticInvariantSet double_integrator_invariant_set(
    const DoubleIntegratorEnv& env, double a, double k1 = 4.0, double k2 = 4.0);

struct ValuePropertyReport {
  int states = 0;
  int dominance_violations = 0;  // V(x0) < h(x0)
  int monotone_violations = 0;   // V_K(x0) < V_{K-1}(f(x0, pi(x0)))
  int descent_checked = 0;       // states with V(x0) <= 0
  int descent_violations = 0;    // positive residual among those
};

// Oracle value function properties on states drawn with env.sample_state.
ValuePropertyReport value_property_check(const Environment& env,
                                         const Policy& policy,
                                         const HeuristicFn& h, double a,
                                         int n_states, int horizon,
                                         std::uint64_t seed);

struct CheckOutcome {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

// The statistical and theorem checks run by `shieldmpc check`, at the sizes
// the acceptance suite uses.
std::vector<CheckOutcome> theory_checks(std::uint64_t seed);

}  // namespace shieldmpc
