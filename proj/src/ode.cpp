#include "einode/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "einode/eigen.hpp"
#include "einode/simd/kernels.hpp"

namespace einode {
namespace {

// Tsitouras (2011) 5(4) pair, FSAL; row 7 of A equals B.
constexpr int kStages = 7;

constexpr std::array<double, kStages> kC = {0.0, 0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0};

constexpr double kA[kStages][kStages] = {
    {},
    {0.161},
    {-0.008480655492356989, 0.335480655492357},
    {2.897153057105493, -6.359448489975075, 4.3622954328695815},
    {5.325864828439257, -11.748883564062828, 7.4955393428898365, -0.09249506636175525},
    {5.86145544294642, -12.92096931784711, 8.159367898576159, -0.071584973281401,
     -0.028269050394068383},
    {0.09646076681806523, 0.01, 0.4798896504144996, 1.379008574103742, -3.290069515436081,
     2.324710524099774},
};

constexpr std::array<double, kStages> kB = {0.09646076681806523, 0.01, 0.4798896504144996,
                                            1.379008574103742,   -3.290069515436081,
                                            2.324710524099774,   0.0};

// b − b̂ of the embedded 4th-order solution.
constexpr std::array<double, kStages> kBtilde = {
    -0.00178001105222577714, -0.0008164344596567469, 0.007880878010261995, -0.1447110071732629,
    0.5823571654525552,      -0.45808210592918697,   1.0 / 66.0};

// Dense output weights b_i(θ) = r1·θ + r2·θ² + r3·θ³ + r4·θ⁴.
constexpr double kR[kStages][4] = {
    {1.0, -2.763706197274826, 2.9132554618219126, -1.0530884977290216},
    {0.0, 0.13169999999999998, -0.2234, 0.1017},
    {0.0, 3.9302962368947516, -5.941033872131505, 2.490627285651253},
    {0.0, -12.411077166933676, 30.33818863028232, -16.548102889244902},
    {0.0, 37.50931341651104, -88.1789048947664, 47.37952196281928},
    {0.0, -27.896526289197286, 65.09189467479366, -34.87065786149661},
    {0.0, 1.5, -4.0, 2.5},
};

constexpr double kSafety = 0.9;
constexpr double kBeta1 = 0.7 / 5.0;
constexpr double kBeta2 = 0.4 / 5.0;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

thread_local std::size_t t_sensitivity_solves = 0;

std::array<double, kStages> dense_weights(double theta) {
  std::array<double, kStages> w{};
  for (int i = 0; i < kStages; ++i)
    w[i] = theta * (kR[i][0] + theta * (kR[i][1] + theta * (kR[i][2] + theta * kR[i][3])));
  return w;
}

class Integrator {
 public:
  Integrator(OdeSystem& system, const SolverConfig& cfg, bool sens)
      : sys_(system), cfg_(cfg), sens_(sens), n_(system.state_dim()),
        p_(system.parameter_count()) {
    for (int i = 0; i < kStages; ++i) {
      k_[i].assign(n_, 0.0);
      if (sens_) {
        jac_[i].assign(n_ * n_, 0.0);
        pjac_[i].assign(n_ * p_, 0.0);
        ks_[i].assign(n_ * p_, 0.0);
      }
    }
    ytmp_.resize(n_);
    ynew_.resize(n_);
    s_.assign(n_ * p_, 0.0);
    stmp_.resize(n_ * p_);
  }

  OdeSolution run(std::span<const double> x0, double t0, double t1, std::span<const double> save_at);

 private:
  // Returns false when the stage produced a non-finite value.
  bool eval_stage(int i, std::span<const double> y) {
    try {
      if (sens_)
        sys_.rhs_with_jacobians(y, k_[i], jac_[i], pjac_[i]);
      else
        sys_.rhs(y, k_[i]);
    } catch (const NumericError&) {
      return false;
    }
    ++rhs_evals_;
    for (double v : k_[i])
      if (!std::isfinite(v)) return false;
    return true;
  }

  // Stages 2..7 from y and k_[0]; leaves y + h·Σ b_i k_i in ynew_.
  bool attempt(std::span<const double> y, double h) {
    for (int i = 1; i < kStages; ++i) {
      for (std::size_t r = 0; r < n_; ++r) {
        double acc = 0.0;
        for (int j = 0; j < i; ++j) acc += kA[i][j] * k_[j][r];
        ytmp_[r] = y[r] + h * acc;
      }
      if (i == kStages - 1) std::copy(ytmp_.begin(), ytmp_.end(), ynew_.begin());
      if (!eval_stage(i, ytmp_)) return false;
    }
    return true;
  }

  double error_norm(std::span<const double> y, double h) const {
    double sum = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
      double e = 0.0;
      for (int i = 0; i < kStages; ++i) e += kBtilde[i] * k_[i][r];
      e *= h;
      const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y[r]), std::abs(ynew_[r]));
      const double q = e / sc;
      sum += q * q;
    }
    return std::sqrt(sum / static_cast<double>(n_));
  }

  // K_i = J_i·S_i + ∂f/∂θ_i with S_i = S + h·Σ_j a_ij K_j. K_1 is carried over (FSAL).
  void propagate_sensitivities(double h) {
    const std::size_t np = n_ * p_;
    for (int i = 1; i < kStages; ++i) {
      std::copy(s_.begin(), s_.end(), stmp_.begin());
      for (int j = 0; j < i; ++j)
        if (kA[i][j] != 0.0) simd::axpy(h * kA[i][j], ks_[j], stmp_);
      stage_tangent(i);
    }
    // S_7 is the new S since row 7 of A equals B.
    std::copy(stmp_.begin(), stmp_.begin() + static_cast<std::ptrdiff_t>(np), s_.begin());
  }

  void stage_tangent(int i) {
    auto& out = ks_[i];
    std::copy(pjac_[i].begin(), pjac_[i].end(), out.begin());
    for (std::size_t r = 0; r < n_; ++r) {
      std::span<double> row(out.data() + r * p_, p_);
      for (std::size_t c = 0; c < n_; ++c) {
        const double jrc = jac_[i][r * n_ + c];
        if (jrc != 0.0) simd::axpy(jrc, std::span<const double>(stmp_.data() + c * p_, p_), row);
      }
    }
  }

  void record(OdeSolution& sol, double t, std::span<const double> y, std::span<const double> s) {
    sol.times.push_back(t);
    sol.states.emplace_back(y.begin(), y.end());
    if (sens_) sol.sensitivities.emplace_back(n_, p_, std::vector<double>(s.begin(), s.end()));
  }

  void record_dense(OdeSolution& sol, double t_save, double t, double h, std::span<const double> y,
                    std::span<const double> s_old) {
    const auto w = dense_weights((t_save - t) / h);
    std::vector<double> yi(y.begin(), y.end());
    for (std::size_t r = 0; r < n_; ++r) {
      double acc = 0.0;
      for (int i = 0; i < kStages; ++i) acc += w[i] * k_[i][r];
      yi[r] += h * acc;
    }
    std::vector<double> si;
    if (sens_) {
      si.assign(s_old.begin(), s_old.end());
      for (int i = 0; i < kStages; ++i)
        if (w[i] != 0.0) simd::axpy(h * w[i], ks_[i], si);
    }
    record(sol, t_save, yi, si);
  }

  double initial_step(std::span<const double> y0, double span) {
    if (cfg_.initial_step > 0.0) return std::min(cfg_.initial_step, span);
    auto norm = [&](auto&& value) {
      double sum = 0.0;
      for (std::size_t r = 0; r < n_; ++r) {
        const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(y0[r]);
        const double q = value(r) / sc;
        sum += q * q;
      }
      return std::sqrt(sum / static_cast<double>(n_));
    };
    const double d0 = norm([&](std::size_t r) { return y0[r]; });
    const double d1 = norm([&](std::size_t r) { return k_[0][r]; });
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    std::vector<double> y1(n_), f1(n_);
    for (std::size_t r = 0; r < n_; ++r) y1[r] = y0[r] + h0 * k_[0][r];
    try {
      sys_.rhs(y1, f1);
    } catch (const NumericError&) {
      return std::min(h0, cfg_.max_step);
    }
    ++rhs_evals_;
    const double d2 = norm([&](std::size_t r) { return (f1[r] - k_[0][r]); }) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    double h = std::min(100.0 * h0, h1);
    if (!std::isfinite(h)) h = h0;
    return std::min({h, span, cfg_.max_step});
  }

  [[noreturn]] void fail_underflow(double t, std::span<const double> y, double h) {
    throw SolvabilityError("solver: step size " + std::to_string(h) + " below minimum at t = " +
                               std::to_string(t),
                           t, max_real_eigenvalue(sys_, y));
  }

  OdeSystem& sys_;
  const SolverConfig& cfg_;
  bool sens_;
  std::size_t n_, p_;
  std::array<std::vector<double>, kStages> k_, jac_, pjac_, ks_;
  std::vector<double> ytmp_, ynew_, s_, stmp_;
  std::size_t rhs_evals_ = 0;
};

OdeSolution Integrator::run(std::span<const double> x0, double t0, double t1,
                            std::span<const double> save_at) {
  OdeSolution sol;
  sol.times.reserve(save_at.size());
  sol.states.reserve(save_at.size());
  if (sens_) sol.sensitivities.reserve(save_at.size());

  std::vector<double> y(x0.begin(), x0.end());
  std::size_t next = 0;
  while (next < save_at.size() && save_at[next] <= t0) record(sol, save_at[next++], y, s_);

  if (!eval_stage(0, y)) throw NumericError("solver: non-finite derivative at the initial state");
  if (sens_) {
    std::fill(stmp_.begin(), stmp_.end(), 0.0);
    stage_tangent(0);
  }

  const double span = t1 - t0;
  const bool fixed = cfg_.fixed_step > 0.0;
  std::size_t fixed_steps = 0;
  double h = 0.0;
  if (fixed) {
    fixed_steps = static_cast<std::size_t>(std::ceil(span / cfg_.fixed_step * (1.0 - 1e-12)));
    fixed_steps = std::max<std::size_t>(fixed_steps, 1);
    h = span / static_cast<double>(fixed_steps);
  } else if (span > 0.0) {
    h = initial_step(y, span);
  }

  double t = t0;
  double err_old = 1e-4;
  bool previous_rejected = false;
  std::size_t attempts = 0;
  std::vector<double> s_old;

  while (t < t1) {
    if (attempts++ >= cfg_.max_steps)
      throw BudgetError("solver: step budget of " + std::to_string(cfg_.max_steps) +
                        " exhausted at t = " + std::to_string(t));
    bool last = false;
    if (fixed) {
      last = sol.accepted_steps + 1 == fixed_steps;
    } else if (t1 - (t + h) < 0.01 * h) {
      h = t1 - t;
      last = true;
    }

    const bool finite = attempt(y, h);
    double err = 0.0;
    if (!fixed) err = finite ? error_norm(y, h) : std::numeric_limits<double>::infinity();
    if (fixed && !finite) fail_underflow(t, y, h);

    if (fixed || (std::isfinite(err) && err <= 1.0)) {
      const double t_new =
          fixed ? (last ? t1 : t0 + static_cast<double>(sol.accepted_steps + 1) * h) : (last ? t1 : t + h);
      if (sens_) {
        s_old = s_;
        propagate_sensitivities(h);
      }
      while (next < save_at.size() && save_at[next] <= t_new) {
        if (save_at[next] == t_new)
          record(sol, t_new, ynew_, s_);
        else
          record_dense(sol, save_at[next], t, h, y, s_old);
        ++next;
      }
      ++sol.accepted_steps;
      std::swap(y, ynew_);
      std::swap(k_[0], k_[kStages - 1]);
      if (sens_) {
        std::swap(jac_[0], jac_[kStages - 1]);
        std::swap(pjac_[0], pjac_[kStages - 1]);
        std::swap(ks_[0], ks_[kStages - 1]);
      }
      t = t_new;
      if (fixed || last) continue;
      double factor = err == 0.0 ? kMaxFactor
                                 : kSafety * std::pow(err, -kBeta1) * std::pow(err_old, kBeta2);
      factor = std::clamp(factor, kMinFactor, kMaxFactor);
      if (previous_rejected) factor = std::min(factor, 1.0);
      err_old = std::max(err, 1e-4);
      previous_rejected = false;
      h = std::min(h * factor, cfg_.max_step);
    } else {
      ++sol.rejected_steps;
      previous_rejected = true;
      const double factor =
          std::isfinite(err) ? std::max(kMinFactor, kSafety * std::pow(err, -0.2)) : kMinFactor;
      h *= factor;
      if (h < cfg_.min_step) fail_underflow(t, y, h);
    }
  }
  while (next < save_at.size()) record(sol, save_at[next++], y, s_);
  sol.rhs_evaluations = rhs_evals_;
  return sol;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ConfigError("solver: tolerances must be positive");
  if (!(min_step > 0.0) || !(min_step < max_step))
    throw ConfigError("solver: need 0 < min_step < max_step");
  if (max_steps == 0) throw ConfigError("solver: max_steps must be positive");
  if (fixed_step < 0.0) throw ConfigError("solver: fixed_step must be non-negative");
}

OdeSolution solve(OdeSystem& system, std::span<const double> x0, std::pair<double, double> t_span,
                  std::span<const double> save_at, const SolverConfig& cfg,
                  bool with_sensitivities) {
  cfg.validate();
  const auto [t0, t1] = t_span;
  if (x0.size() != system.state_dim()) throw DimensionError("solve: initial state dimension mismatch");
  for (double v : x0)
    if (!std::isfinite(v)) throw NumericError("solve: non-finite initial state");
  if (!(t1 >= t0)) throw ConfigError("solve: t_span must satisfy t0 <= t1");
  for (std::size_t i = 0; i < save_at.size(); ++i) {
    if (save_at[i] < t0 || save_at[i] > t1) throw AlignmentError("solve: save point outside t_span");
    if (i > 0 && !(save_at[i] > save_at[i - 1]))
      throw AlignmentError("solve: save points must be strictly increasing");
  }
  if (with_sensitivities) ++t_sensitivity_solves;
  Integrator integrator(system, cfg, with_sensitivities);
  return integrator.run(x0, t0, t1, save_at);
}

std::size_t sensitivity_solve_count() noexcept { return t_sensitivity_solves; }

double max_real_eigenvalue(OdeSystem& system, std::span<const double> x) {
  try {
    const auto e = eigen(system.system_matrix(x));
    double best = -std::numeric_limits<double>::infinity();
    for (const Complex& l : e.values) best = std::max(best, l.real());
    return best;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

LinearOscillator::LinearOscillator(double c, double d, double m) : c_(c), d_(d), m_(m) {
  if (!(m > 0.0) || !std::isfinite(c) || !std::isfinite(d))
    throw ConfigError("linear oscillator: need finite c, d and m > 0");
}

void LinearOscillator::rhs(std::span<const double> x, std::span<double> dx) {
  dx[0] = x[1];
  dx[1] = (-c_ * x[0] - d_ * x[1]) / m_;
}

void LinearOscillator::rhs_with_jacobians(std::span<const double> x, std::span<double> dx,
                                          std::span<double> state_jacobian, std::span<double>) {
  rhs(x, dx);
  state_jacobian[0] = 0.0;
  state_jacobian[1] = 1.0;
  state_jacobian[2] = -c_ / m_;
  state_jacobian[3] = -d_ / m_;
}

RealMatrix LinearOscillator::system_matrix(std::span<const double>) {
  return RealMatrix{{0.0, 1.0}, {-c_ / m_, -d_ / m_}};
}

VanDerPol::VanDerPol(double mu) : mu_(mu) {
  if (!std::isfinite(mu)) throw ConfigError("van der pol: mu must be finite");
}

void VanDerPol::rhs(std::span<const double> x, std::span<double> dx) {
  dx[0] = x[1];
  dx[1] = mu_ * (1.0 - x[0] * x[0]) * x[1] - x[0];
}

void VanDerPol::rhs_with_jacobians(std::span<const double> x, std::span<double> dx,
                                   std::span<double> state_jacobian, std::span<double>) {
  rhs(x, dx);
  const RealMatrix a = system_matrix(x);
  std::copy(a.data().begin(), a.data().end(), state_jacobian.begin());
}

RealMatrix VanDerPol::system_matrix(std::span<const double> x) {
  return RealMatrix{{0.0, 1.0}, {-2.0 * mu_ * x[0] * x[1] - 1.0, mu_ * (1.0 - x[0] * x[0])}};
}

OdeSolution ground_truth_solve(OdeSystem& system, std::span<const double> x0,
                               std::pair<double, double> t_span, std::span<const double> save_at,
                               const SolverConfig& cfg) {
  return solve(system, x0, t_span, save_at, cfg, false);
}

}  // namespace einode
