#include "einode/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace einode {
namespace {

constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

double sign_of(double magnitude, double reference) {
  return reference >= 0.0 ? std::fabs(magnitude) : -std::fabs(magnitude);
}

/// Householder reduction to upper Hessenberg form, in place.
void reduce_to_hessenberg(RealMatrix& h) {
  const std::size_t n = h.rows();
  if (n < 3) return;
  std::vector<double> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += h(i, k) * h(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (h(k + 1, k) > 0.0) alpha = -alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = h(i, k);
      if (i == k + 1) v[i] -= alpha;
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    // H <- (I - beta v vᵀ) H
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
      s *= beta;
      for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
    }
    // H <- H (I - beta v vᵀ)
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
    }
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed). Returns the sweep count.
std::size_t hessenberg_qr(RealMatrix& a, std::vector<Complex>& out, std::size_t max_sweeps) {
  const int n = static_cast<int>(a.rows());
  out.assign(static_cast<std::size_t>(n), Complex{});
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::fabs(a(i, j));

  std::size_t sweeps = 0;
  int nn = n - 1;
  double t = 0.0;  // accumulated exceptional shift
  while (nn >= 0) {
    int its = 0;
    int l;
    for (;;) {
      // Look for a single small subdiagonal element to split the active window.
      for (l = nn; l >= 1; --l) {
        double s = std::fabs(a(l - 1, l - 1)) + std::fabs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::fabs(a(l, l - 1)) <= kMachineEps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      if (l < 0) l = 0;
      double x = a(nn, nn);
      if (l == nn) {
        out[nn] = Complex(x + t, 0.0);
        nn -= 1;
        break;
      }
      double y = a(nn - 1, nn - 1);
      double w = a(nn, nn - 1) * a(nn - 1, nn);
      if (l == nn - 1) {
        // Trailing 2×2 block deflates.
        const double p = 0.5 * (y - x);
        const double q = p * p + w;
        double z = std::sqrt(std::fabs(q));
        x += t;
        if (q >= 0.0) {
          z = p + sign_of(z, p);
          out[nn - 1] = Complex(x + z, 0.0);
          out[nn] = Complex(z != 0.0 ? x - w / z : x + z, 0.0);
        } else {
          out[nn - 1] = Complex(x + p, -z);
          out[nn] = Complex(x + p, z);
        }
        nn -= 2;
        break;
      }
      if (sweeps >= max_sweeps) {
        std::vector<Complex> estimates = out;
        for (int i = 0; i <= nn; ++i) estimates[i] = Complex(a(i, i) + t, 0.0);
        throw ConvergenceError("eigen: QR iteration did not converge after " +
                                   std::to_string(sweeps) + " sweeps",
                               std::move(estimates));
      }
      if (its == 10 || its == 20) {
        // Exceptional shift against cycling.
        t += x;
        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
        const double s = std::fabs(a(nn, nn - 1)) + std::fabs(a(nn - 1, nn - 2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      ++its;
      ++sweeps;
      int m;
      double p = 0.0, q = 0.0, r = 0.0, z;
      for (m = nn - 2; m >= l; --m) {
        // Form the double shift and look for two consecutive small subdiagonals.
        z = a(m, m);
        r = x - z;
        double s = y - z;
        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
        q = a(m + 1, m + 1) - z - r - s;
        r = a(m + 2, m + 1);
        s = std::fabs(p) + std::fabs(q) + std::fabs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        const double u = std::fabs(a(m, m - 1)) * (std::fabs(q) + std::fabs(r));
        const double v =
            std::fabs(p) * (std::fabs(a(m - 1, m - 1)) + std::fabs(z) + std::fabs(a(m + 1, m + 1)));
        if (u <= kMachineEps * v) break;
      }
      for (int i = m + 2; i <= nn; ++i) {
        a(i, i - 2) = 0.0;
        if (i != m + 2) a(i, i - 3) = 0.0;
      }
      for (int k = m; k <= nn - 1; ++k) {
        // Implicit double QR step on rows l..nn, columns m..nn.
        if (k != m) {
          p = a(k, k - 1);
          q = a(k + 1, k - 1);
          r = k != nn - 1 ? a(k + 2, k - 1) : 0.0;
          x = std::fabs(p) + std::fabs(q) + std::fabs(r);
          if (x != 0.0) {
            p /= x;
            q /= x;
            r /= x;
          }
        }
        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
        if (s == 0.0) continue;
        if (k == m) {
          if (l != m) a(k, k - 1) = -a(k, k - 1);
        } else {
          a(k, k - 1) = -s * x;
        }
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;
        for (int j = k; j <= nn; ++j) {
          p = a(k, j) + q * a(k + 1, j);
          if (k != nn - 1) {
            p += r * a(k + 2, j);
            a(k + 2, j) -= p * z;
          }
          a(k + 1, j) -= p * y;
          a(k, j) -= p * x;
        }
        const int mmin = nn < k + 3 ? nn : k + 3;
        for (int i = l; i <= mmin; ++i) {
          p = x * a(i, k) + y * a(i, k + 1);
          if (k != nn - 1) {
            p += z * a(i, k + 2);
            a(i, k + 2) -= p * r;
          }
          a(i, k + 1) -= p * q;
          a(i, k) -= p;
        }
      }
    }
  }
  return sweeps;
}

bool lex_less(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// LU of (A - shift·I) where tiny pivots are replaced instead of rejected.
class ShiftedLu {
 public:
  ShiftedLu(const RealMatrix& a, Complex shift, double pivot_floor)
      : n_(a.rows()), lu_(n_, n_), piv_(n_) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) lu_(i, j) = a(i, j) - (i == j ? shift : Complex{});
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n_; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      piv_[k] = p;
      if (p != k)
        for (std::size_t j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(p, j));
      if (std::abs(lu_(k, k)) < pivot_floor) lu_(k, k) = pivot_floor;
      for (std::size_t i = k + 1; i < n_; ++i) {
        const Complex f = lu_(i, k) / lu_(k, k);
        lu_(i, k) = f;
        for (std::size_t j = k + 1; j < n_; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  void solve(std::vector<Complex>& x) const {
    for (std::size_t k = 0; k < n_; ++k)
      if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
    for (std::size_t i = 1; i < n_; ++i)
      for (std::size_t k = 0; k < i; ++k) x[i] -= lu_(i, k) * x[k];
    for (std::size_t i = n_; i-- > 0;) {
      for (std::size_t k = i + 1; k < n_; ++k) x[i] -= lu_(i, k) * x[k];
      x[i] /= lu_(i, i);
    }
  }

 private:
  std::size_t n_;
  ComplexMatrix lu_;
  std::vector<std::size_t> piv_;
};

double vector_norm(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const Complex& c : v) s += std::norm(c);
  return std::sqrt(s);
}

double residual_norm(const RealMatrix& a, Complex lambda, const std::vector<Complex>& v) {
  const std::size_t n = a.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Complex r = -lambda * v[i];
    for (std::size_t j = 0; j < n; ++j) r += a(i, j) * v[j];
    s += std::norm(r);
  }
  return std::sqrt(s);
}

void start_vector(std::vector<Complex>& v, std::size_t variant) {
  // Fixed, irregular entries so no eigenvector is orthogonal to the start by structure.
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double phase = 0.6180339887498949 * static_cast<double>(i + 1 + 7 * variant);
    v[i] = Complex(0.5 + (phase - std::floor(phase)), 0.0);
  }
}

void project_out(std::vector<Complex>& v, const std::vector<std::vector<Complex>>& basis) {
  for (const auto& b : basis) {
    Complex proj{};
    for (std::size_t i = 0; i < v.size(); ++i) proj += std::conj(b[i]) * v[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * b[i];
  }
}

/// Inverse iteration for one eigenvalue; `cluster` holds already accepted vectors of nearly equal
/// eigenvalues, which the iterate is kept orthogonal to.
std::vector<Complex> inverse_iteration(const RealMatrix& a, Complex lambda, double a_norm,
                                       double residual_target,
                                       const std::vector<std::vector<Complex>>& cluster) {
  const std::size_t n = a.rows();
  const double scale = std::max(a_norm, std::numeric_limits<double>::min());
  ShiftedLu lu(a, lambda, scale * 1e-15);
  std::vector<Complex> v(n);
  start_vector(v, cluster.size());
  project_out(v, cluster);
  // One solve plus a refinement step; continue only while the residual is above target.
  for (int iter = 0; iter < 5; ++iter) {
    lu.solve(v);
    project_out(v, cluster);
    const double norm = vector_norm(v);
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    for (Complex& c : v) c /= norm;
    if (iter >= 1 && residual_norm(a, lambda, v) <= residual_target) break;
  }
  return v;
}

}  // namespace

void normalize_eigenvector(std::span<Complex> v) {
  double norm = 0.0;
  for (const Complex& c : v) norm += std::norm(c);
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) return;
  std::size_t lead = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > best) {
      best = mag;
      lead = i;
    }
  }
  const Complex phase = std::conj(v[lead]) / (std::abs(v[lead]) * norm);
  for (Complex& c : v) c *= phase;
  v[lead] = Complex(std::abs(v[lead]), 0.0);
}

EigenResult eigen(const RealMatrix& a, double tol, std::size_t max_iterations) {
  EigenOptions options;
  options.tol = tol;
  options.max_iterations = max_iterations;
  return eigen(a, options);
}

EigenResult eigen(const RealMatrix& a, const EigenOptions& options) {
  if (!a.square() || a.rows() == 0) throw DimensionError("eigen: matrix must be square, n >= 1");
  if (!all_finite(a)) throw NumericError("eigen: matrix has non-finite entries");
  const std::size_t n = a.rows();
  const std::size_t budget = options.max_iterations == 0 ? 30 * n : options.max_iterations;

  EigenResult result;
  RealMatrix h = a;
  reduce_to_hessenberg(h);
  result.iterations = hessenberg_qr(h, result.values, budget);
  std::stable_sort(result.values.begin(), result.values.end(), lex_less);

  const double a_fro = norm_fro(a);
  const double residual_target = options.tol * std::max(a_fro, std::numeric_limits<double>::min());
  const double a_inf = norm_inf(a);
  result.vectors = ComplexMatrix(n, n);
  std::vector<std::vector<Complex>> columns(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex lambda = result.values[i];
    if (lambda.imag() < 0.0 && i + 1 < n && result.values[i + 1] == std::conj(lambda)) {
      continue;  // filled from the conjugate partner below
    }
    std::vector<std::vector<Complex>> cluster;
    for (std::size_t j = 0; j < i; ++j) {
      if (!columns[j].empty() && std::abs(result.values[j] - lambda) <= options.degeneracy_threshold)
        cluster.push_back(columns[j]);
    }
    auto v = inverse_iteration(a, lambda, a_inf, residual_target, cluster);
    if (!cluster.empty() && residual_norm(a, lambda, v) > 1e3 * residual_target) {
      // Defective eigenvalue: no independent eigenvector exists, reuse the cluster's.
      v = cluster.front();
    }
    normalize_eigenvector(v);
    columns[i] = v;
    if (lambda.imag() > 0.0 && i > 0 && result.values[i - 1] == std::conj(lambda) &&
        columns[i - 1].empty()) {
      std::vector<Complex> partner(n);
      for (std::size_t k = 0; k < n; ++k) partner[k] = std::conj(v[k]);
      columns[i - 1] = std::move(partner);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) result.vectors(k, i) = columns[i][k];

  for (std::size_t i = 0; i < n && !result.degenerate; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(result.values[i] - result.values[j]) < options.degeneracy_threshold) {
        result.degenerate = true;
        break;
      }
  return result;
}

EigenResult eigen2x2_closed_form(const RealMatrix& a) {
  if (a.rows() != 2 || a.cols() != 2) throw DimensionError("eigen2x2_closed_form: need a 2x2 matrix");
  const double p = a(0, 0), q = a(0, 1), r = a(1, 0), s = a(1, 1);
  const double mean = 0.5 * (p + s);
  const double half_diff = 0.5 * (p - s);
  const double disc = half_diff * half_diff + q * r;  // (tr/2)^2 - det without cancellation
  EigenResult result;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double big = mean + sign_of(root, mean);
    const double det = p * s - q * r;
    const double small = big != 0.0 ? det / big : mean - sign_of(root, mean);
    result.values = {Complex(big, 0.0), Complex(small, 0.0)};
  } else {
    const double root = std::sqrt(-disc);
    result.values = {Complex(mean, -root), Complex(mean, root)};
  }
  std::stable_sort(result.values.begin(), result.values.end(), lex_less);

  const double scale = std::max({std::fabs(p), std::fabs(q), std::fabs(r), std::fabs(s), 1e-300});
  result.vectors = ComplexMatrix(2, 2);
  const bool repeated = std::abs(result.values[0] - result.values[1]) < 1e-8;
  result.degenerate = repeated;
  for (std::size_t i = 0; i < 2; ++i) {
    const Complex lambda = result.values[i];
    // Null vector of [[p-λ, q], [r, s-λ]]: either (q, λ-p) or (λ-s, r).
    std::vector<Complex> v1{Complex(q), lambda - p};
    std::vector<Complex> v2{lambda - s, Complex(r)};
    std::vector<Complex> v = vector_norm(v1) >= vector_norm(v2) ? v1 : v2;
    if (vector_norm(v) <= 1e-14 * scale) {
      // A = λI: every vector is an eigenvector.
      v = {Complex(i == 0 ? 1.0 : 0.0), Complex(i == 0 ? 0.0 : 1.0)};
    }
    normalize_eigenvector(v);
    result.vectors(0, i) = v[0];
    result.vectors(1, i) = v[1];
  }
  return result;
}

ComplexVec to_interleaved(const std::vector<Complex>& values) {
  ComplexVec out;
  out.reserve(2 * values.size());
  for (const Complex& c : values) {
    out.push_back(c.real());
    out.push_back(c.imag());
  }
  return out;
}

std::vector<Complex> from_interleaved(const ComplexVec& interleaved) {
  if (interleaved.size() % 2 != 0) throw DimensionError("from_interleaved: odd length");
  std::vector<Complex> out(interleaved.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = Complex(interleaved[2 * i], interleaved[2 * i + 1]);
  return out;
}

double eigen_frequency(Complex lambda) {
  return std::fabs(lambda.imag()) / (2.0 * std::numbers::pi);
}

double eigen_damping(Complex lambda) {
  const double mag = std::abs(lambda);
  if (mag < 1e-12) return 0.0;
  return -lambda.real() / mag;
}

double stiffness_ratio(const std::vector<Complex>& values, double floor) {
  if (values.empty()) return 1.0;
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (const Complex& v : values) {
    hi = std::max(hi, std::fabs(v.real()));
    lo = std::min(lo, std::fabs(v.real()));
  }
  if (hi < floor) return 1.0;
  return hi / std::max(lo, floor);
}

}  // namespace einode
