#include "einode/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "einode/eigen_diff.hpp"
#include "einode/simd/kernels.hpp"

namespace einode {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStiffnessFloor = 1e-6;
constexpr double kDampingFloor = 1e-12;

struct Deviation {
  double value;
  double slope;  // ∂ε/∂a
};

Deviation deviation(double a, double b, ErrorMetric metric) {
  const double r = a - b;
  if (metric == ErrorMetric::squared) return {r * r, 2.0 * r};
  return {std::abs(r), r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)};
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Per-instant value plus ∂/∂Re λ_i and ∂/∂Im λ_i.
struct InstantTerm {
  double value = 0.0;
  std::vector<double> d_re, d_im;

  explicit InstantTerm(std::size_t n) : d_re(n, 0.0), d_im(n, 0.0) {}

  void reset(std::size_t n) {
    value = 0.0;
    d_re.assign(n, 0.0);
    d_im.assign(n, 0.0);
  }
};

void term_stb(const std::vector<Complex>& l, ErrorMetric metric, InstantTerm& out) {
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double re = l[i].real();
    const auto e = deviation(std::max(re, 0.0), 0.0, metric);
    out.value += e.value;
    if (re > 0.0) out.d_re[i] += e.slope;
  }
}

void term_osc(const std::vector<Complex>& l, const PairSet& pairs, ErrorMetric metric,
              InstantTerm& out) {
  for (const auto& [a, b] : pairs) {
    const auto e = deviation(l[a].real(), l[b].real(), metric);
    out.value += e.value;
    out.d_re[a] += e.slope;
    out.d_re[b] -= e.slope;
  }
}

// Property p(λ) with its partials, for FRQ and DMP.
struct Property {
  double value, d_re, d_im;
};

Property frequency_of(Complex l) {
  return {std::abs(l.imag()) / kTwoPi, 0.0, sign(l.imag()) / kTwoPi};
}

Property damping_of(Complex l) {
  const double mag = std::abs(l);
  if (mag < kDampingFloor) return {0.0, 0.0, 0.0};
  const double m3 = mag * mag * mag;
  return {-l.real() / mag, -l.imag() * l.imag() / m3, l.real() * l.imag() / m3};
}

template <typename PropertyFn>
void term_pair_property(const std::vector<Complex>& l, const PairSet& pairs, PropertyFn prop,
                        double target, ErrorMetric metric, PairMetric pm, InstantTerm& out) {
  for (const auto& [a, b] : pairs) {
    const Property pa = prop(l[a]);
    const Property pb = prop(l[b]);
    if (pm == PairMetric::pairwise) {
      const auto e = deviation(pa.value, pb.value, metric);
      out.value += e.value;
      out.d_re[a] += e.slope * pa.d_re;
      out.d_im[a] += e.slope * pa.d_im;
      out.d_re[b] -= e.slope * pb.d_re;
      out.d_im[b] -= e.slope * pb.d_im;
    } else {
      const auto ea = deviation(pa.value, target, metric);
      const auto eb = deviation(pb.value, target, metric);
      out.value += 0.5 * (ea.value + eb.value);
      out.d_re[a] += 0.5 * ea.slope * pa.d_re;
      out.d_im[a] += 0.5 * ea.slope * pa.d_im;
      out.d_re[b] += 0.5 * eb.slope * pb.d_re;
      out.d_im[b] += 0.5 * eb.slope * pb.d_im;
    }
  }
}

void term_stf(const std::vector<Complex>& l, double target,
              const std::optional<std::pair<double, double>>& corridor, ErrorMetric metric,
              InstantTerm& out) {
  if (l.empty()) return;
  // Ties: largest |Re| at the lowest index, smallest |Re| at the highest index.
  std::size_t imax = 0, imin = 0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double m = std::abs(l[i].real());
    if (m > std::abs(l[imax].real())) imax = i;
    if (m <= std::abs(l[imin].real())) imin = i;
  }
  const double num = std::abs(l[imax].real());
  const double small = std::abs(l[imin].real());
  double ratio = 1.0;
  double d_num = 0.0, d_small = 0.0;
  if (num >= kStiffnessFloor) {
    const double den = std::max(small, kStiffnessFloor);
    ratio = num / den;
    d_num = 1.0 / den;
    if (small >= kStiffnessFloor) d_small = -num / (den * den);
  }
  const double reference = corridor ? std::clamp(ratio, corridor->first, corridor->second) : target;
  const auto e = deviation(ratio, reference, metric);
  out.value += e.value;
  if (corridor && ratio >= corridor->first && ratio <= corridor->second) return;
  out.d_re[imax] += e.slope * d_num * sign(l[imax].real());
  out.d_re[imin] += e.slope * d_small * sign(l[imin].real());
}

struct EigenLossContext {
  const LossSpec& spec;
  PairSet pairs;
};

void instant_term(LossKind kind, const EigenInstant& inst, std::size_t k,
                  const EigenLossContext& ctx, InstantTerm& out) {
  const auto& l = inst.values;
  const auto& spec = ctx.spec;
  switch (kind) {
    case LossKind::stb:
      term_stb(l, spec.metric, out);
      break;
    case LossKind::osc:
      term_osc(l, ctx.pairs, spec.metric, out);
      break;
    case LossKind::frq:
      term_pair_property(l, ctx.pairs, frequency_of,
                         spec.pair_metric == PairMetric::target ? spec.frequency.at(k) : 0.0,
                         spec.metric, spec.pair_metric, out);
      break;
    case LossKind::dmp:
      term_pair_property(l, ctx.pairs, damping_of,
                         spec.pair_metric == PairMetric::target ? spec.damping.at(k) : 0.0,
                         spec.metric, spec.pair_metric, out);
      break;
    case LossKind::stf:
      term_stf(l, spec.stiffness.defined() ? spec.stiffness.at(k) : 1.0, spec.stiffness_corridor,
               spec.metric, out);
      break;
    case LossKind::sol:
      break;
  }
}

PairSet resolve_pairs(const LossSpec& spec, const EigenTrajectory& traj) {
  if (!spec.pairs.empty() || traj.instants.empty()) return spec.pairs;
  const auto& first = traj.instants.front().values;
  if (first.size() == 2) return {{0, 1}};
  return build_pairs(first, spec.pair_count);
}

// Mean over instants of the per-instant term; grad (length P) receives the chained gradient.
double eigen_loss(LossKind kind, const EigenTrajectory& traj, const EigenLossContext& ctx,
                  std::span<double> grad) {
  const std::size_t count = traj.instants.size();
  if (count == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  double total = 0.0;
  InstantTerm term(0);
  std::vector<double> coeff;  // gradient over the instant's basis rows
  for (std::size_t k = 0; k < count; ++k) {
    const auto& inst = traj.instants[k];
    const std::size_t n = inst.values.size();
    term.reset(n);
    instant_term(kind, inst, k, ctx, term);
    total += term.value;
    if (grad.empty() || !inst.has_gradient()) continue;
    coeff.assign(inst.gradient_basis.rows(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double gr = term.d_re[i] * inv;
      const double gi = term.d_im[i] * inv;
      for (std::size_t q = 0; q < coeff.size(); ++q)
        coeff[q] += gr * inst.dlambda_dbasis(2 * i, q) + gi * inst.dlambda_dbasis(2 * i + 1, q);
    }
    for (std::size_t q = 0; q < coeff.size(); ++q)
      if (coeff[q] != 0.0) simd::axpy(coeff[q], inst.gradient_basis.row(q), grad);
  }
  return total * inv;
}

std::vector<std::size_t> align(const std::vector<double>& solution_times,
                               const std::vector<double>& data_times) {
  std::vector<std::size_t> index(data_times.size());
  for (std::size_t i = 0; i < data_times.size(); ++i) {
    const auto it = std::lower_bound(solution_times.begin(), solution_times.end(), data_times[i]);
    if (it == solution_times.end() || *it != data_times[i])
      throw AlignmentError("loss: data time " + std::to_string(data_times[i]) +
                           " is not a solution save point");
    index[i] = static_cast<std::size_t>(it - solution_times.begin());
  }
  return index;
}

double sol_loss(const OdeSolution& sol, const ReferenceData& data, ErrorMetric metric,
                std::span<double> grad) {
  if (data.times.size() != data.states.size())
    throw AlignmentError("loss: reference times and states differ in length");
  if (data.times.empty()) return 0.0;
  const auto index = align(sol.times, data.times);
  const double inv = 1.0 / static_cast<double>(data.times.size());
  double total = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto e = deviation(sol.states[index[i]][0], data.states[i].at(0), metric);
    total += e.value;
    if (!grad.empty() && e.slope != 0.0)
      simd::axpy(e.slope * inv, sol.sensitivities[index[i]].row(0), grad);
  }
  return total * inv;
}

template <typename Perm>
double assignment_cost(const std::vector<Complex>& prev, const std::vector<Complex>& cur,
                       const Perm& perm) {
  double cost = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) cost += std::abs(prev[i] - cur[perm[i]]);
  return cost;
}

}  // namespace

const char* loss_name(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::sol: return "SOL";
    case LossKind::stb: return "STB";
    case LossKind::osc: return "OSC";
    case LossKind::frq: return "FRQ";
    case LossKind::dmp: return "DMP";
    case LossKind::stf: return "STF";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  std::string upper;
  for (char c : name)
    if (!std::isspace(static_cast<unsigned char>(c)))
      upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (LossKind k : kAllLossKinds)
    if (upper == loss_name(k)) return k;
  throw ConfigError("unknown loss '" + name + "'");
}

double TargetSeries::at(std::size_t instant) const {
  if (!per_instant.empty()) {
    if (instant >= per_instant.size()) throw DimensionError("target series shorter than the grid");
    return per_instant[instant];
  }
  if (!constant) throw ConfigError("loss target is not set");
  return *constant;
}

LossSpec LossSpec::from_names(const std::string& names) {
  LossSpec spec;
  std::size_t start = 0;
  while (start <= names.size()) {
    const auto end = std::min(names.find('+', start), names.size());
    const LossKind kind = parse_loss_kind(names.substr(start, end - start));
    if (spec.has(kind)) throw ConfigError("loss '" + std::string(loss_name(kind)) + "' listed twice");
    spec.active.push_back(kind);
    start = end + 1;
  }
  std::sort(spec.active.begin(), spec.active.end());
  return spec;
}

std::string LossSpec::name() const {
  std::string out;
  for (LossKind k : active) {
    if (!out.empty()) out += '+';
    out += loss_name(k);
  }
  return out;
}

bool LossSpec::has(LossKind kind) const noexcept {
  return std::find(active.begin(), active.end(), kind) != active.end();
}

bool LossSpec::needs_eigen() const noexcept {
  return std::any_of(active.begin(), active.end(), [](LossKind k) { return k != LossKind::sol; });
}

void LossSpec::validate() const {
  if (active.empty()) throw ConfigError("loss spec: no active losses");
  if (!std::is_sorted(active.begin(), active.end()) ||
      std::adjacent_find(active.begin(), active.end()) != active.end())
    throw ConfigError("loss spec: active losses must be unique and in canonical order");
  for (double s : scalings)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("loss spec: scalings must be positive");
  if (eigen_stride == 0) throw ConfigError("loss spec: eigen_stride must be >= 1");
  if (pair_metric == PairMetric::target) {
    if (has(LossKind::frq) && !frequency.defined()) throw ConfigError("loss spec: FRQ needs a frequency target");
    if (has(LossKind::dmp) && !damping.defined()) throw ConfigError("loss spec: DMP needs a damping target");
  }
  if (frequency.constant && *frequency.constant < 0.0) throw ConfigError("loss spec: frequency target must be >= 0");
  if (damping.constant && std::abs(*damping.constant) > 1.0)
    throw ConfigError("loss spec: damping target must lie in [-1, 1]");
  if (stiffness.constant && *stiffness.constant < 1.0) throw ConfigError("loss spec: stiffness target must be >= 1");
  if (stiffness_corridor && !(stiffness_corridor->first <= stiffness_corridor->second))
    throw ConfigError("loss spec: stiffness corridor needs lo <= hi");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [a, b] = pairs[i];
    if (a == b) throw ConfigError("loss spec: pair members must differ");
    for (std::size_t j = 0; j < i; ++j) {
      const auto [c, d] = pairs[j];
      if (a == c || a == d || b == c || b == d) throw ConfigError("loss spec: pairs must be disjoint");
    }
  }
}

RealMatrix EigenInstant::dlambda_dtheta() const {
  RealMatrix out(dlambda_dbasis.rows(), gradient_basis.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t q = 0; q < gradient_basis.rows(); ++q)
      simd::axpy(dlambda_dbasis(i, q), gradient_basis.row(q), out.row(i));
  return out;
}

std::vector<double> EigenTrajectory::times() const {
  std::vector<double> out;
  out.reserve(instants.size());
  for (const auto& i : instants) out.push_back(i.time);
  return out;
}

double EigenTrajectory::max_real() const {
  if (instants.empty()) return std::numeric_limits<double>::quiet_NaN();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& inst : instants)
    for (const Complex& l : inst.values) best = std::max(best, l.real());
  return best;
}

std::vector<std::vector<std::size_t>> track_eigenvalues(
    const std::vector<std::vector<Complex>>& raw) {
  std::vector<std::vector<std::size_t>> perms;
  perms.reserve(raw.size());
  if (raw.empty()) return perms;
  const std::size_t n = raw.front().size();
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  perms.push_back(identity);
  std::vector<Complex> prev = raw.front();

  for (std::size_t k = 1; k < raw.size(); ++k) {
    const auto& cur = raw[k];
    if (cur.size() != n) throw DimensionError("track_eigenvalues: eigenvalue count changed");
    std::vector<std::size_t> best = identity;
    if (n <= 8) {
      double best_cost = assignment_cost(prev, cur, best);
      std::vector<std::size_t> perm = identity;
      while (std::next_permutation(perm.begin(), perm.end())) {
        const double cost = assignment_cost(prev, cur, perm);
        if (cost < best_cost) {
          best_cost = cost;
          best = perm;
        }
      }
    } else {
      std::vector<bool> used(n, false);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t pick = n;
        double d_best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (used[j]) continue;
          const double d = std::abs(prev[i] - cur[j]);
          if (d < d_best) {
            d_best = d;
            pick = j;
          }
        }
        if (pick == n) pick = static_cast<std::size_t>(std::find(used.begin(), used.end(), false) - used.begin());
        used[pick] = true;
        best[i] = pick;
      }
    }
    for (std::size_t i = 0; i < n; ++i) prev[i] = cur[best[i]];
    perms.push_back(std::move(best));
  }
  return perms;
}

void apply_tracking(std::vector<EigenInstant>& instants) {
  std::vector<std::vector<Complex>> raw;
  raw.reserve(instants.size());
  for (const auto& inst : instants) raw.push_back(inst.values);
  const auto perms = track_eigenvalues(raw);
  for (std::size_t k = 0; k < instants.size(); ++k) {
    auto& inst = instants[k];
    const auto& perm = perms[k];
    const std::size_t n = perm.size();
    bool identity = true;
    for (std::size_t i = 0; i < n; ++i) identity = identity && perm[i] == i;
    if (identity) continue;
    std::vector<Complex> values(n);
    ComplexMatrix vectors(inst.vectors.rows(), inst.vectors.cols());
    RealMatrix dl(inst.dlambda_dbasis.rows(), inst.dlambda_dbasis.cols());
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = inst.values[perm[i]];
      for (std::size_t r = 0; r < vectors.rows(); ++r) vectors(r, i) = inst.vectors(r, perm[i]);
      if (dl.size() != 0)
        for (std::size_t part = 0; part < 2; ++part) {
          const auto src = inst.dlambda_dbasis.row(2 * perm[i] + part);
          std::copy(src.begin(), src.end(), dl.row(2 * i + part).begin());
        }
    }
    inst.values = std::move(values);
    inst.vectors = std::move(vectors);
    inst.dlambda_dbasis = std::move(dl);
  }
}

PairSet build_pairs(const std::vector<Complex>& values, std::size_t count) {
  const std::size_t n = values.size();
  if (n == 2) return {{0, 1}};
  if (2 * count > n) throw ConfigError("build_pairs: more pairs requested than eigenvalues allow");
  PairSet pairs;
  std::vector<bool> used(n, false);
  for (std::size_t p = 0; p < count; ++p) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> pick{n, n};
    for (std::size_t a = 0; a < n; ++a) {
      if (used[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (used[b]) continue;
        const double d = std::abs(values[a].real() - values[b].real());
        if (d < best) {
          best = d;
          pick = {a, b};
        }
      }
    }
    used[pick.first] = used[pick.second] = true;
    pairs.push_back(pick);
  }
  return pairs;
}

EigenTrajectory eigen_trajectory(HybridRhs& rhs, const OdeSolution& sol, std::size_t stride,
                                 bool with_gradients) {
  if (stride == 0) throw ConfigError("eigen_trajectory: stride must be >= 1");
  if (with_gradients && sol.sensitivities.size() != sol.states.size())
    throw DimensionError("eigen_trajectory: solution carries no sensitivities");
  EigenTrajectory traj;
  const std::size_t n = rhs.state_dim();
  const std::size_t p = rhs.parameter_count();
  SystemMatrixDerivatives d;
  std::vector<Complex> v(n);
  traj.instants.reserve((sol.states.size() + stride - 1) / stride);
  for (std::size_t k = 0; k < sol.states.size(); k += stride) {
    EigenInstant inst;
    inst.time = sol.times[k];
    const auto& x = sol.states[k];
    if (with_gradients) {
      rhs.system_matrix_derivatives(x, d);
      inst.system_matrix = d.a;
    } else {
      inst.system_matrix = rhs.system_matrix(x);
    }
    EigenResult eig = eigen(inst.system_matrix);
    inst.degenerate = eig.degenerate;
    if (eig.degenerate) ++traj.degenerate_instants;
    if (with_gradients) {
      // dλ_i/dθ = Σ_r w_ir ∂A_r/∂θ + Σ_c (Σ_r w_ir ∂A_r/∂x_c) ∂x_c/∂θ,
      // w_ir = U⁻¹(i,j)·U(l,i) for r = (j,l)
      const RealMatrix& s = sol.sensitivities[k];
      const auto& active = d.active_rows;
      try {
        const ComplexMatrix u_inv = eigenvector_inverse(eig.vectors);
        const std::size_t q = active.size() + n;
        RealMatrix coeff(2 * n, q);
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
          std::fill(v.begin(), v.end(), Complex{});
          for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t r = active[a];
            const Complex w = u_inv(i, r / n) * eig.vectors(r % n, i);
            coeff(2 * i, a) = w.real();
            coeff(2 * i + 1, a) = w.imag();
            for (std::size_t c = 0; c < n; ++c) v[c] += w * d.da_dx(r, c);
          }
          for (std::size_t c = 0; c < n; ++c) {
            coeff(2 * i, active.size() + c) = v[c].real();
            coeff(2 * i + 1, active.size() + c) = v[c].imag();
          }
        }
        for (double e : coeff.data()) finite = finite && std::isfinite(e);
        if (finite) {
          std::vector<double> basis;
          basis.reserve(q * p);
          for (std::size_t r : active) {
            const auto src = d.da_dtheta.row(r);
            basis.insert(basis.end(), src.begin(), src.end());
          }
          basis.insert(basis.end(), s.data().begin(), s.data().end());
          inst.dlambda_dbasis = std::move(coeff);
          inst.gradient_basis = RealMatrix(q, p, std::move(basis));
        } else {
          ++traj.skipped_gradients;
        }
      } catch (const SingularMatrixError&) {
        ++traj.skipped_gradients;
      }
    }
    inst.values = std::move(eig.values);
    inst.vectors = std::move(eig.vectors);
    traj.instants.push_back(std::move(inst));
  }
  apply_tracking(traj.instants);
  return traj;
}

EigenTrajectory eigen_trajectory(const std::vector<double>& times,
                                 const std::vector<RealMatrix>& matrices) {
  if (times.size() != matrices.size()) throw DimensionError("eigen_trajectory: length mismatch");
  EigenTrajectory traj;
  for (std::size_t k = 0; k < times.size(); ++k) {
    EigenInstant inst;
    inst.time = times[k];
    inst.system_matrix = matrices[k];
    EigenResult eig = eigen(matrices[k]);
    inst.degenerate = eig.degenerate;
    if (eig.degenerate) ++traj.degenerate_instants;
    inst.values = std::move(eig.values);
    inst.vectors = std::move(eig.vectors);
    traj.instants.push_back(std::move(inst));
  }
  apply_tracking(traj.instants);
  return traj;
}

double loss_sol(const OdeSolution& sol, const ReferenceData& data, ErrorMetric metric) {
  return sol_loss(sol, data, metric, {});
}

namespace {

double eigen_loss_value(LossKind kind, const EigenTrajectory& traj, const LossSpec& spec,
                        const PairSet& pairs) {
  const EigenLossContext ctx{spec, pairs};
  return eigen_loss(kind, traj, ctx, {});
}

}  // namespace

double loss_stb(const EigenTrajectory& traj, ErrorMetric metric) {
  LossSpec spec;
  spec.metric = metric;
  return eigen_loss_value(LossKind::stb, traj, spec, {});
}

double loss_osc(const EigenTrajectory& traj, const PairSet& pairs, ErrorMetric metric) {
  LossSpec spec;
  spec.metric = metric;
  return eigen_loss_value(LossKind::osc, traj, spec, pairs);
}

double loss_frq(const EigenTrajectory& traj, const PairSet& pairs, const TargetSeries& target,
                ErrorMetric metric, PairMetric pm) {
  LossSpec spec;
  spec.metric = metric;
  spec.pair_metric = pm;
  spec.frequency = target;
  return eigen_loss_value(LossKind::frq, traj, spec, pairs);
}

double loss_dmp(const EigenTrajectory& traj, const PairSet& pairs, const TargetSeries& target,
                ErrorMetric metric, PairMetric pm) {
  LossSpec spec;
  spec.metric = metric;
  spec.pair_metric = pm;
  spec.damping = target;
  return eigen_loss_value(LossKind::dmp, traj, spec, pairs);
}

double loss_stf(const EigenTrajectory& traj, const TargetSeries& target, ErrorMetric metric,
                std::optional<std::pair<double, double>> corridor) {
  LossSpec spec;
  spec.metric = metric;
  spec.stiffness = target;
  spec.stiffness_corridor = corridor;
  return eigen_loss_value(LossKind::stf, traj, spec, {});
}

LossEvaluation loss_vector_and_jacobian(HybridRhs& rhs, const OdeSolution& sol,
                                        const LossSpec& spec, const ReferenceData& data) {
  spec.validate();
  const std::size_t p = rhs.parameter_count();
  if (sol.sensitivities.size() != sol.states.size())
    throw DimensionError("loss_vector_and_jacobian: solution carries no sensitivities");
  LossEvaluation out;
  out.kinds = spec.active;
  out.values.assign(spec.active.size(), 0.0);
  out.jacobian = RealMatrix(spec.active.size(), p);
  if (spec.needs_eigen()) out.trajectory = eigen_trajectory(rhs, sol, spec.eigen_stride, true);
  const EigenLossContext ctx{spec, resolve_pairs(spec, out.trajectory)};
  for (std::size_t r = 0; r < spec.active.size(); ++r) {
    const LossKind kind = spec.active[r];
    if (kind == LossKind::sol)
      out.values[r] = sol_loss(sol, data, spec.metric, out.jacobian.row(r));
    else
      out.values[r] = eigen_loss(kind, out.trajectory, ctx, out.jacobian.row(r));
  }
  return out;
}

std::vector<double> loss_vector(HybridRhs& rhs, const OdeSolution& sol, const LossSpec& spec,
                                const ReferenceData& data) {
  spec.validate();
  std::vector<double> values(spec.active.size(), 0.0);
  EigenTrajectory traj;
  if (spec.needs_eigen()) traj = eigen_trajectory(rhs, sol, spec.eigen_stride, false);
  const EigenLossContext ctx{spec, resolve_pairs(spec, traj)};
  for (std::size_t r = 0; r < spec.active.size(); ++r) {
    const LossKind kind = spec.active[r];
    values[r] = kind == LossKind::sol ? sol_loss(sol, data, spec.metric, {})
                                      : eigen_loss(kind, traj, ctx, {});
  }
  return values;
}

}  // namespace einode
