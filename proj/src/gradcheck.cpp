#include "einode/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "einode/eigen.hpp"
#include "einode/eigen_diff.hpp"
#include "einode/losses.hpp"
#include "einode/network.hpp"
#include "einode/ode.hpp"

namespace einode {
namespace {

using Rng = std::mt19937_64;

RealMatrix random_matrix(Rng& rng, std::size_t n, double bound) {
  std::uniform_real_distribution<double> u(-bound, bound);
  RealMatrix a(n, n);
  for (double& v : a.data()) v = u(rng);
  return a;
}

double min_gap(const std::vector<Complex>& l) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i + 1; j < l.size(); ++j) gap = std::min(gap, std::abs(l[i] - l[j]));
  return gap;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double relative_error(const std::vector<double>& fd, const std::vector<double>& an) {
  std::vector<double> diff(fd.size());
  for (std::size_t i = 0; i < fd.size(); ++i) diff[i] = fd[i] - an[i];
  const double scale = inf_norm(an);
  return scale > 0.0 ? inf_norm(diff) / scale : inf_norm(diff);
}

GradcheckResult finish(GradcheckResult r) {
  r.passed = r.max_error <= r.tolerance;
  return r;
}

DenseNetwork random_network(Rng& rng, std::size_t hidden, double weight_scale, double bias_scale) {
  DenseNetwork net = glorot_init(rng(), single_hidden_layout(hidden));
  std::normal_distribution<double> nb(0.0, bias_scale);
  auto p = net.mutable_parameters();
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const std::size_t w = net.weight_offset(l);
    const std::size_t b = net.bias_offset(l);
    for (std::size_t i = w; i < b; ++i) p[i] *= weight_scale;
    for (std::size_t i = 0; i < net.layers()[l].outputs; ++i) p[b + i] = nb(rng);
  }
  return net;
}

}  // namespace

GradcheckResult check_eigen_forward(std::size_t matrices, std::uint64_t seed) {
  GradcheckResult r{"eigen forward vs central differences", 0, 0.0, 1e-5, false};
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> dim(2, 6);
  const double h = 1e-6;
  while (r.cases < matrices) {
    const std::size_t n = dim(rng);
    const RealMatrix a = random_matrix(rng, n, 5.0);
    const RealMatrix da = random_matrix(rng, n, 1.0);
    const EigenResult e = eigen(a);
    if (min_gap(e.values) <= 1e-2) continue;
    const auto fwd = eigen_forward(e, da);
    const auto plus = eigen(add(a, scale(da, h))).values;
    const auto minus = eigen(subtract(a, scale(da, h))).values;
    auto nearest = [](const std::vector<Complex>& set, Complex z) {
      return *std::min_element(set.begin(), set.end(), [z](Complex x, Complex y) {
        return std::abs(x - z) < std::abs(y - z);
      });
    };
    std::vector<double> fd, an;
    for (std::size_t i = 0; i < n; ++i) {
      const Complex d = (nearest(plus, e.values[i]) - nearest(minus, e.values[i])) / (2.0 * h);
      fd.push_back(d.real());
      fd.push_back(d.imag());
      an.push_back(fwd.dD(i, i).real());
      an.push_back(fwd.dD(i, i).imag());
    }
    r.max_error = std::max(r.max_error, relative_error(fd, an));
    ++r.cases;
  }
  return finish(r);
}

GradcheckResult check_eigen_reverse(std::size_t matrices, std::uint64_t seed) {
  GradcheckResult r{"eigen forward/reverse dot-product identity", 0, 0.0, 1e-8, false};
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> dim(2, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  while (r.cases < matrices) {
    const std::size_t n = dim(rng);
    const RealMatrix a = random_matrix(rng, n, 5.0);
    const RealMatrix da = random_matrix(rng, n, 1.0);
    const EigenResult e = eigen(a);
    if (min_gap(e.values) <= 1e-2) continue;
    ComplexMatrix dd_bar(n, n);
    for (std::size_t i = 0; i < n; ++i) dd_bar(i, i) = Complex(g(rng), g(rng));
    const RealMatrix abar = eigen_reverse(e, dd_bar, ComplexMatrix());
    const auto fwd = eigen_forward(e, da);
    double lhs = 0.0, lhs_mag = 0.0;
    for (std::size_t k = 0; k < n * n; ++k) {
      lhs += abar.data()[k] * da.data()[k];
      lhs_mag += std::abs(abar.data()[k] * da.data()[k]);
    }
    double rhs = 0.0, rhs_mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double term = (dd_bar(i, i) * fwd.dD(i, i)).real();
      rhs += term;
      rhs_mag += std::abs(dd_bar(i, i)) * std::abs(fwd.dD(i, i));
    }
    const double scale_ref = std::max({lhs_mag, rhs_mag, std::numeric_limits<double>::min()});
    r.max_error = std::max(r.max_error, std::abs(lhs - rhs) / scale_ref);
    ++r.cases;
  }
  return finish(r);
}

GradcheckResult check_rhs_derivatives(std::size_t cases, std::uint64_t seed) {
  GradcheckResult r{"network rhs state/parameter derivatives", 0, 0.0, 1e-6, false};
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const double h = 1e-6;
  for (; r.cases < cases; ++r.cases) {
    HybridRhs rhs(random_network(rng, 8, 1.5, 0.5));
    const std::vector<double> x = {ux(rng), ux(rng)};
    // System matrix against central differences of the rhs.
    const RealMatrix a = rhs.system_matrix(x);
    std::vector<double> fd, an;
    for (std::size_t c = 0; c < 2; ++c) {
      auto xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      const auto fp = rhs_eval(rhs, xp), fm = rhs_eval(rhs, xm);
      for (std::size_t row = 0; row < 2; ++row) {
        fd.push_back((fp[row] - fm[row]) / (2.0 * h));
        an.push_back(a(row, c));
      }
    }
    r.max_error = std::max(r.max_error, relative_error(fd, an));
    // Parameter tangent along a random direction.
    const std::size_t p = rhs.parameter_count();
    std::vector<double> dtheta(p);
    for (double& v : dtheta) v = g(rng);
    const auto jvp = rhs.param_jvp(x, dtheta);
    const std::vector<double> theta(rhs.network().parameters().begin(), rhs.network().parameters().end());
    auto shifted = [&](double s) {
      std::vector<double> t = theta;
      for (std::size_t i = 0; i < p; ++i) t[i] += s * dtheta[i];
      rhs.set_parameters(t);
      auto f = rhs_eval(rhs, x);
      rhs.set_parameters(theta);
      return f;
    };
    const auto fp = shifted(h), fm = shifted(-h);
    std::vector<double> fd2 = {(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)};
    r.max_error = std::max(r.max_error, relative_error(fd2, jvp));
  }
  return finish(r);
}

GradcheckResult check_system_matrix_derivatives(std::size_t cases, std::uint64_t seed) {
  GradcheckResult r{"system matrix second derivatives", 0, 0.0, 1e-5, false};
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  const double h = 1e-6;
  for (; r.cases < cases; ++r.cases) {
    HybridRhs rhs(random_network(rng, 8, 1.5, 0.5));
    const std::vector<double> x = {ux(rng), ux(rng)};
    const auto d = rhs.system_matrix_derivatives(x);
    std::vector<double> fd, an;
    for (std::size_t c = 0; c < 2; ++c) {
      auto xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      const RealMatrix ap = rhs.system_matrix(xp), am = rhs.system_matrix(xm);
      for (std::size_t k = 0; k < 4; ++k) {
        fd.push_back((ap.data()[k] - am.data()[k]) / (2.0 * h));
        an.push_back(d.da_dx(k, c));
      }
    }
    const std::vector<double> theta(rhs.network().parameters().begin(), rhs.network().parameters().end());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      rhs.set_parameters(tp);
      const RealMatrix ap = rhs.system_matrix(x);
      rhs.set_parameters(tm);
      const RealMatrix am = rhs.system_matrix(x);
      for (std::size_t k = 0; k < 4; ++k) {
        fd.push_back((ap.data()[k] - am.data()[k]) / (2.0 * h));
        an.push_back(d.da_dtheta(k, i));
      }
    }
    rhs.set_parameters(theta);
    r.max_error = std::max(r.max_error, relative_error(fd, an));
  }
  return finish(r);
}

GradcheckResult check_solve_sensitivities(std::size_t hidden, double horizon, std::uint64_t seed) {
  GradcheckResult r{"solve sensitivities vs central differences", 0, 0.0, 1e-4, false};
  Rng rng(seed);
  HybridRhs rhs(random_network(rng, hidden, 1.0, 0.3));
  SolverConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-12;
  const std::vector<double> x0 = {1.0, 0.0};
  std::vector<double> save;
  for (int k = 1; k <= 4; ++k) save.push_back(horizon * k / 4.0);
  const OdeSolution sol = solve(rhs, x0, {0.0, horizon}, save, cfg, true);
  const std::vector<double> theta(rhs.network().parameters().begin(), rhs.network().parameters().end());
  const double h = 1e-5;
  std::vector<double> fd, an;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    rhs.set_parameters(tp);
    const auto sp = solve(rhs, x0, {0.0, horizon}, save, cfg, false);
    rhs.set_parameters(tm);
    const auto sm = solve(rhs, x0, {0.0, horizon}, save, cfg, false);
    for (std::size_t k = 0; k < save.size(); ++k)
      for (std::size_t s = 0; s < 2; ++s) {
        fd.push_back((sp.states[k][s] - sm.states[k][s]) / (2.0 * h));
        an.push_back(sol.sensitivities[k](s, i));
      }
  }
  rhs.set_parameters(theta);
  r.cases = theta.size();
  r.max_error = relative_error(fd, an);
  return finish(r);
}

namespace {

// Every instant away from the kinks of |·|, max(·, 0) and the real/complex transition.
bool smooth_instants(const EigenTrajectory& traj) {
  for (const auto& inst : traj.instants) {
    const auto& l = inst.values;
    for (const Complex& z : l)
      if (std::abs(z.real()) < 1e-3) return false;
    const bool complex_pair = std::abs(l[0].imag()) > 1e-2;
    const bool separated_real = l[0].imag() == 0.0 && std::abs(l[0].real() - l[1].real()) > 1e-2;
    if (!complex_pair && !separated_real) return false;
  }
  return true;
}

}  // namespace

std::vector<GradcheckResult> check_loss_rows(std::uint64_t seed) {
  Rng rng(seed);
  SolverConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-12;
  const double horizon = 3.0;
  std::vector<double> grid;
  for (int k = 0; k <= 30; ++k) grid.push_back(k / 10.0);
  const std::vector<double> x0 = {1.0, 0.0};

  LinearOscillator reference(25.0, 0.05, 1.0);
  ReferenceData data;
  data.times = grid;
  data.states = ground_truth_solve(reference, x0, {0.0, horizon}, grid, cfg).states;

  LossSpec spec = LossSpec::from_names("SOL+STB+OSC+FRQ+DMP+STF");
  spec.frequency.constant = 0.795764;
  spec.damping.constant = 0.005;
  spec.stiffness.constant = 1.0;

  // Draw networks until every loss row is exercised away from its kinks.
  std::optional<HybridRhs> candidate;
  OdeSolution sol;
  LossEvaluation eval;
  for (int attempt = 0; attempt < 500 && !candidate; ++attempt) {
    HybridRhs rhs(random_network(rng, 8, 2.5, 1.0));
    try {
      sol = solve(rhs, x0, {0.0, horizon}, grid, cfg, true);
      eval = loss_vector_and_jacobian(rhs, sol, spec, data);
    } catch (const Error&) {
      continue;
    }
    if (!smooth_instants(eval.trajectory)) continue;
    bool all_active = true;
    for (std::size_t k = 0; k < eval.values.size(); ++k) {
      double m = 0.0;
      for (double v : eval.jacobian.row(k)) m = std::max(m, std::abs(v));
      all_active = all_active && m > 1e-3;
    }
    if (all_active) candidate.emplace(std::move(rhs));
  }
  if (!candidate) throw Error("gradcheck: no network exercising every loss row was found");
  HybridRhs& rhs = *candidate;
  const std::vector<double> theta(rhs.network().parameters().begin(), rhs.network().parameters().end());
  const std::size_t rows = spec.active.size();
  std::vector<std::vector<double>> fd(rows, std::vector<double>(theta.size()));
  const double h = 1e-5;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    rhs.set_parameters(tp);
    const auto lp = loss_vector(rhs, solve(rhs, x0, {0.0, horizon}, grid, cfg, false), spec, data);
    rhs.set_parameters(tm);
    const auto lm = loss_vector(rhs, solve(rhs, x0, {0.0, horizon}, grid, cfg, false), spec, data);
    for (std::size_t k = 0; k < rows; ++k) fd[k][i] = (lp[k] - lm[k]) / (2.0 * h);
  }
  rhs.set_parameters(theta);

  std::vector<GradcheckResult> out;
  for (std::size_t k = 0; k < rows; ++k) {
    GradcheckResult r{std::string("loss row ") + loss_name(spec.active[k]), theta.size(), 0.0, 1e-4,
                      false};
    const auto row = eval.jacobian.row(k);
    r.max_error = relative_error(fd[k], std::vector<double>(row.begin(), row.end()));
    out.push_back(finish(r));
  }
  return out;
}

std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed) {
  std::vector<GradcheckResult> out;
  out.push_back(check_eigen_forward(500, seed));
  out.push_back(check_eigen_reverse(500, seed + 1));
  out.push_back(check_rhs_derivatives(200, seed + 2));
  out.push_back(check_system_matrix_derivatives(50, seed + 3));
  out.push_back(check_solve_sensitivities(8, 2.0, seed + 4));
  for (auto& r : check_loss_rows(seed + 5)) out.push_back(std::move(r));
  return out;
}

}  // namespace einode
