#include "polyfk/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace polyfk {

std::string to_string(Scheme s) {
  return s == Scheme::exp_transform ? "exp_transform" : "baseline";
}

Scheme parse_scheme(const std::string &s) {
  if (s == "exp_transform")
    return Scheme::exp_transform;
  if (s == "baseline")
    return Scheme::baseline;
  throw std::invalid_argument("unknown scheme '" + s +
                              "' (expected exp_transform or baseline)");
}

void RunConfig::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("theta out of range [0, 1]");
  if (!(dt > 0.0))
    throw std::invalid_argument("dt must be positive");
  if (!(T > 0.0))
    throw std::invalid_argument("T must be positive");
  if (dt > T * (1.0 + 1e-12))
    throw std::invalid_argument("dt exceeds T: zero steps requested");
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("epsilon must be non-negative");
  if (!(eta0 > 0.0))
    throw std::invalid_argument("eta0 must be positive");
  if (!(newton.tol > 0.0))
    throw std::invalid_argument("newton.tol must be positive");
  if (newton.max_iters < 1)
    throw std::invalid_argument("newton.max_iters must be at least 1");
  if (!(newton.relaxation > 0.0 && newton.relaxation <= 1.0))
    throw std::invalid_argument("newton.relaxation out of range (0, 1]");
  if (output_every < 1)
    throw std::invalid_argument("output_every must be at least 1");
}

int RunConfig::num_steps() const {
  return static_cast<int>(std::ceil(T / dt * (1.0 - 1e-12)));
}

double min_concentration(const DGSpace &space, const State &s) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < space.num_elements(); ++k) {
    const FieldValues v = space.evaluate(s.dofs, k, space.element_rule(k).points);
    m = std::min(m, v.value.minCoeff());
  }
  return s.variable == Variable::log_concentration ? std::exp(m) : m;
}

State initial_lambda(const DGSpace &space, const ScalarField &c0, double c_min) {
  if (!(c_min > 0.0))
    throw std::invalid_argument("initial_lambda: floor must be positive");
  State s;
  s.dofs = space.project([&](const Point &x) {
    const double c = c0(x);
    if (c < 0.0) {
      std::ostringstream os;
      os.precision(17);
      os << "invalid concentration " << c << " at (" << x.x() << ", " << x.y() << ")";
      throw std::domain_error(os.str());
    }
    return std::log(std::max(c, c_min));
  });
  s.variable = Variable::log_concentration;
  return s;
}

State initial_concentration(const DGSpace &space, const ScalarField &c0) {
  State s;
  s.dofs = space.project(c0);
  s.variable = Variable::concentration;
  return s;
}

StepSolver::StepSolver(const DGSpace &space, const ModelData &model, const RunConfig &cfg)
    : space_(&space), model_(&model), cfg_(cfg),
      ctx_(make_penalty_context(space, model, cfg.eta0)) {
  cfg_.validate();
  if (cfg_.scheme == Scheme::exp_transform)
    fisher_ = std::make_unique<FisherOperator>(space, model, ctx_);
  else
    baseline_ = std::make_unique<BaselineOperator>(space, model, ctx_);
}

StepSolver::~StepSolver() = default;

void StepSolver::factorize(const SparseMatrix &m) {
  if (!analyzed_) {
    lu_.analyzePattern(m);
    analyzed_ = true;
  }
  lu_.factorize(m);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("singular or ill-conditioned system matrix: " +
                             lu_.lastErrorMessage());
}

std::pair<State, StepStats> StepSolver::step(const State &old, double t_new) {
  return cfg_.scheme == Scheme::exp_transform ? step_theta(old, t_new)
                                              : step_baseline(old, t_new);
}

std::pair<State, StepStats> StepSolver::step_theta(const State &old, double t_new) {
  const auto t0 = std::chrono::steady_clock::now();
  if (old.variable != Variable::log_concentration)
    throw std::invalid_argument("step_theta: state is not a log-concentration");
  if (!old.dofs.allFinite())
    throw std::invalid_argument("step_theta: old state is not finite");
  const ThetaParams params{cfg_.theta, t_new - old.time, cfg_.epsilon};
  const FisherOperator::Step step =
      fisher_->begin_step(old.dofs, old.time, t_new, params, cfg_.exec);
  const NewtonOptions &nw = cfg_.newton;

  StepStats st;
  Eigen::VectorXd lambda = old.dofs;
  for (int it = 0;; ++it) {
    LinearSystem sys = nw.exact_penalty_jacobian
                           ? fisher_->linearize_exact(step, lambda, cfg_.exec)
                           : fisher_->linearize(step, lambda, nullptr, cfg_.exec);
    const double rn = sys.residual.norm();
    st.residual_history.push_back(rn);
    if (rn <= nw.tol) {
      st.newton_iters = it;
      st.residual = rn;
      break;
    }
    if (it == nw.max_iters) {
      std::ostringstream os;
      os.precision(3);
      os << "Newton did not converge in " << nw.max_iters << " iterations at t=" << t_new
         << "; residual trace:";
      for (double r : st.residual_history)
        os << ' ' << std::scientific << r;
      throw NewtonError(os.str(), st.residual_history);
    }
    factorize(sys.matrix);
    const Eigen::VectorXd delta = lu_.solve(sys.residual);
    if (!delta.allFinite())
      throw NewtonError("Newton update is not finite at t=" + std::to_string(t_new),
                        st.residual_history);
    double omega = nw.relaxation;
    if (nw.line_search) {
      for (int half = 0; half < 30; ++half) {
        double trial = std::numeric_limits<double>::infinity();
        try {
          trial = fisher_->residual(step, lambda - omega * delta, nullptr, cfg_.exec).norm();
        } catch (const std::overflow_error &) {
        }
        if (trial <= (1.0 - 1e-4 * omega) * rn)
          break;
        omega *= 0.5;
      }
    }
    lambda -= omega * delta;
    const double lmax = lambda.cwiseAbs().maxCoeff();
    if (lmax > nw.divergence_bound)
      throw NewtonError("Newton diverged at t=" + std::to_string(t_new) +
                            ": |lambda|_inf = " + std::to_string(lmax),
                        st.residual_history);
    // A step shortened by the line search says nothing about round-off.
    if (nw.accept_stagnation && omega == nw.relaxation &&
        omega * delta.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + lmax)) {
      st.newton_iters = it + 1;
      st.residual = fisher_->residual(step, lambda, nullptr, cfg_.exec).norm();
      st.residual_history.push_back(st.residual);
      st.stagnated = st.residual > nw.tol;
      break;
    }
  }

  State out{lambda, t_new, Variable::log_concentration};
  st.time = t_new;
  st.min_c = min_concentration(*space_, out);
  st.entropy = discrete_entropy(*space_, lambda);
  st.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(out), st};
}

std::pair<State, StepStats> StepSolver::step_baseline(const State &old, double t_new) {
  const auto t0 = std::chrono::steady_clock::now();
  if (old.variable != Variable::concentration)
    throw std::invalid_argument("step_baseline: state is not a concentration");
  const LinearSystem sys = baseline_->assemble(old.dofs, t_new, t_new - old.time, cfg_.exec);
  factorize(sys.matrix);
  State out{lu_.solve(sys.residual), t_new, Variable::concentration};
  if (!out.dofs.allFinite())
    throw std::runtime_error("baseline solve produced non-finite values at t=" +
                             std::to_string(t_new));
  StepStats st;
  st.time = t_new;
  st.newton_iters = 1;
  st.min_c = min_concentration(*space_, out);
  st.entropy = std::numeric_limits<double>::quiet_NaN();
  st.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(out), st};
}

Trajectory run(const DGSpace &space, const ModelData &model, const RunConfig &cfg,
               const State &initial, const StepObserver &observer) {
  cfg.validate();
  const Variable expected = cfg.scheme == Scheme::exp_transform
                                ? Variable::log_concentration
                                : Variable::concentration;
  if (initial.variable != expected)
    throw std::invalid_argument("run: initial state variable does not match the scheme");
  StepSolver solver(space, model, cfg);
  const int n = cfg.num_steps();
  const double t_start = initial.time;
  Trajectory traj;
  traj.states.push_back(initial);
  State cur = initial;
  for (int k = 1; k <= n; ++k) {
    const double t_new = t_start + cfg.T * k / n;
    auto [next, st] = solver.step(cur, t_new);
    st.step = k;
    if (observer)
      observer(next, st);
    traj.stats.push_back(std::move(st));
    cur = std::move(next);
    if (k % cfg.output_every == 0 || k == n)
      traj.states.push_back(cur);
  }
  return traj;
}

} // namespace polyfk
