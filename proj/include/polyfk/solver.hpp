#pragma once

#include "polyfk/assembly.hpp"
#include "polyfk/dgspace.hpp"
#include "polyfk/forms.hpp"
#include "polyfk/model.hpp"

#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyfk {

enum class Scheme { exp_transform, baseline };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string &s);

struct NewtonOptions {
  double tol = 1e-10;      // absolute, on the residual 2-norm
  int max_iters = 25;
  double relaxation = 1.0; // omega in lambda <- lambda - omega J^{-1} r
  double divergence_bound = 1e3;
  /// Accept an iterate whose update is at round-off level relative to the
  /// state even if the residual norm sits slightly above `tol`.
  bool accept_stagnation = true;
  /// Halve the step (up to 30 times) until the true residual, with eta
  /// re-evaluated, decreases by the Armijo factor 1 - 1e-4 omega.
  bool line_search = false;
  /// Differentiate eta(lambda) instead of freezing it at the iterate.
  bool exact_penalty_jacobian = false;
};

struct RunConfig {
  double theta = 1.0;
  double dt = 0.0;
  double T = 0.0;
  double epsilon = 0.0;
  double eta0 = 1.0;
  NewtonOptions newton;
  Scheme scheme = Scheme::exp_transform;
  /// Keep every n-th state in the trajectory (the final state is always kept).
  int output_every = 1;
  Execution exec = Execution::parallel;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// ceil(T / dt), guarding against round-off in the quotient.
  int num_steps() const;
};

struct StepStats {
  int step = 0;
  double time = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
  bool stagnated = false; // converged by the round-off criterion
  std::vector<double> residual_history;
  double min_c = 0.0;
  double entropy = 0.0; // NaN for the baseline scheme
  double wall_seconds = 0.0;
};

class NewtonError : public std::runtime_error {
public:
  NewtonError(const std::string &what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double> &trace() const { return trace_; }

private:
  std::vector<double> trace_;
};

/// Minimum of the concentration over element quadrature points: e^lambda for
/// log-variable states, c itself otherwise.
double min_concentration(const DGSpace &space, const State &s);

/// lambda_0 = projection of log(max(c0, c_min)). Throws on negative c0.
State initial_lambda(const DGSpace &space, const ScalarField &c0, double c_min = 1e-10);
/// Projection of c0 for the baseline scheme.
State initial_concentration(const DGSpace &space, const ScalarField &c0);

/// One-step solver for either scheme; keeps the factorization's symbolic
/// analysis across steps.
class StepSolver {
public:
  StepSolver(const DGSpace &space, const ModelData &model, const RunConfig &cfg);
  ~StepSolver();

  /// Advance `old` to `t_new`.
  std::pair<State, StepStats> step(const State &old, double t_new);

  const PenaltyContext &penalty() const { return ctx_; }
  const FisherOperator *fisher() const { return fisher_.get(); }

private:
  std::pair<State, StepStats> step_theta(const State &old, double t_new);
  std::pair<State, StepStats> step_baseline(const State &old, double t_new);
  void factorize(const SparseMatrix &m);

  const DGSpace *space_;
  const ModelData *model_;
  RunConfig cfg_;
  PenaltyContext ctx_;
  std::unique_ptr<FisherOperator> fisher_;
  std::unique_ptr<BaselineOperator> baseline_;
  Eigen::SparseLU<SparseMatrix> lu_;
  bool analyzed_ = false;
};

struct Trajectory {
  std::vector<State> states; // initial state first, then at the output cadence
  std::vector<StepStats> stats; // one per step
};

using StepObserver = std::function<void(const State &, const StepStats &)>;

/// Advance from `initial` to cfg.T in num_steps() uniform steps. The
/// observer, if any, sees every step.
Trajectory run(const DGSpace &space, const ModelData &model, const RunConfig &cfg,
               const State &initial, const StepObserver &observer = {});

} // namespace polyfk
