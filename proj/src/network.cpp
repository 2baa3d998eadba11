#include "einode/network.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "einode/simd/kernels.hpp"

namespace einode {
namespace {

struct ActivationValues {
  double value, first, second;  // σ(z), σ'(z), σ''(z)
};

inline ActivationValues activate(Activation act, double z) {
  if (act == Activation::tanh) {
    const double t = std::tanh(z);
    const double d = 1.0 - t * t;
    return {t, d, -2.0 * t * d};
  }
  return {z, 1.0, 0.0};
}

}  // namespace

std::vector<LayerShape> reference_layout() { return single_hidden_layout(32); }

std::vector<LayerShape> single_hidden_layout(std::size_t hidden) {
  return {{2, hidden, Activation::tanh}, {hidden, 1, Activation::identity}};
}

DenseNetwork::DenseNetwork(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("network: no layers");
  std::size_t total = 0;
  max_width_ = layers_.front().inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& s = layers_[l];
    if (s.inputs == 0 || s.outputs == 0) throw DimensionError("network: empty layer");
    if (l > 0 && layers_[l - 1].outputs != s.inputs)
      throw DimensionError("network: layer shapes do not chain");
    offsets_.push_back(total);
    total += s.inputs * s.outputs + s.outputs;
    max_width_ = std::max(max_width_, s.outputs);
  }
  params_.assign(total, 0.0);
}

DenseNetwork::DenseNetwork(std::vector<LayerShape> layers, std::vector<double> parameters)
    : DenseNetwork(std::move(layers)) {
  set_parameters(parameters);
}

void DenseNetwork::set_parameters(std::span<const double> params) {
  if (params.size() != params_.size())
    throw DimensionError("network: expected " + std::to_string(params_.size()) + " parameters, got " +
                         std::to_string(params.size()));
  std::copy(params.begin(), params.end(), params_.begin());
}

DenseNetwork glorot_init(std::uint64_t seed, const std::vector<LayerShape>& layers) {
  DenseNetwork net(layers);
  std::mt19937_64 rng(seed);
  auto params = net.mutable_parameters();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(s.inputs + s.outputs));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t w = net.weight_offset(l);
    for (std::size_t i = 0; i < s.inputs * s.outputs; ++i) params[w + i] = dist(rng);
  }
  return net;
}

NetworkWorkspace::NetworkWorkspace(const DenseNetwork& net) {
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();
  z_.resize(depth + 1);
  a_.resize(depth + 1);
  d1_.resize(depth + 1);
  d2_.resize(depth + 1);
  zdot_.resize(depth + 1);
  adot_.resize(depth + 1);
  a_[0].resize(net.input_dim());
  for (std::size_t l = 0; l < depth; ++l) {
    z_[l + 1].resize(layers[l].outputs);
    a_[l + 1].resize(layers[l].outputs);
    d1_[l + 1].resize(layers[l].outputs);
    d2_[l + 1].resize(layers[l].outputs);
  }
  const std::size_t in = net.input_dim();
  identity_.assign(in * in, 0.0);
  for (std::size_t i = 0; i < in; ++i) identity_[i * in + i] = 1.0;
  const std::size_t w = net.max_width();
  abar_.resize(w);
  adotbar_.resize(w);
  next_abar_.resize(w);
  next_adotbar_.resize(w);
}

void NetworkEvaluator::forward(std::span<const double> x, std::size_t directions,
                               std::span<const double> seed_tangents) {
  const auto& layers = net_.layers();
  if (x.size() != net_.input_dim()) throw DimensionError("network: input dimension mismatch");
  const auto params = net_.parameters();
  std::copy(x.begin(), x.end(), ws_.a_[0].begin());
  const std::size_t d = directions;
  if (d > 0) {
    ws_.adot_[0].assign(seed_tangents.begin(), seed_tangents.end());
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    const double* w = params.data() + net_.weight_offset(l);
    const double* b = params.data() + net_.bias_offset(l);
    const auto& a_prev = ws_.a_[l];
    auto& z = ws_.z_[l + 1];
    auto& a = ws_.a_[l + 1];
    if (d > 0) {
      ws_.zdot_[l + 1].assign(s.outputs * d, 0.0);
      ws_.adot_[l + 1].resize(s.outputs * d);
    }
    const auto& adot_prev = ws_.adot_[l];
    for (std::size_t o = 0; o < s.outputs; ++o) {
      const std::span<const double> w_row(w + o * s.inputs, s.inputs);
      z[o] = b[o] + simd::dot(w_row, a_prev);
      const ActivationValues act = activate(s.activation, z[o]);
      a[o] = act.value;
      ws_.d1_[l + 1][o] = act.first;
      ws_.d2_[l + 1][o] = act.second;
      if (d > 0) {
        double* zdot = ws_.zdot_[l + 1].data() + o * d;
        for (std::size_t i = 0; i < s.inputs; ++i) {
          const double wi = w_row[i];
          if (wi == 0.0) continue;
          const double* src = adot_prev.data() + i * d;
          for (std::size_t k = 0; k < d; ++k) zdot[k] += wi * src[k];
        }
        double* adot = ws_.adot_[l + 1].data() + o * d;
        for (std::size_t k = 0; k < d; ++k) adot[k] = act.first * zdot[k];
      }
    }
  }
}

void NetworkEvaluator::evaluate(std::span<const double> x, std::span<double> y) {
  forward(x, 0, {});
  const auto& out = ws_.a_.back();
  if (y.size() != out.size()) throw DimensionError("network: output dimension mismatch");
  std::copy(out.begin(), out.end(), y.begin());
}

void NetworkEvaluator::evaluate_with_state_jacobian(std::span<const double> x, std::span<double> y,
                                                    std::span<double> jacobian) {
  const std::size_t in = net_.input_dim();
  const std::size_t out_dim = net_.output_dim();
  if (jacobian.size() != in * out_dim) throw DimensionError("network: jacobian size mismatch");
  forward(x, in, ws_.identity_);
  const auto& out = ws_.a_.back();
  if (y.size() != out.size()) throw DimensionError("network: output dimension mismatch");
  std::copy(out.begin(), out.end(), y.begin());
  const auto& adot = ws_.adot_.back();
  std::copy(adot.begin(), adot.end(), jacobian.begin());
}

void NetworkEvaluator::output_param_gradient(std::size_t output, std::span<double> grad) {
  const auto& layers = net_.layers();
  if (grad.size() != net_.parameter_count()) throw DimensionError("network: gradient size mismatch");
  if (output >= net_.output_dim()) throw DimensionError("network: output index out of range");
  const auto params = net_.parameters();
  std::fill(grad.begin(), grad.end(), 0.0);
  auto& abar = ws_.abar_;
  std::fill(abar.begin(), abar.end(), 0.0);
  abar[output] = 1.0;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& s = layers[l];
    const double* w = params.data() + net_.weight_offset(l);
    double* gw = grad.data() + net_.weight_offset(l);
    double* gb = grad.data() + net_.bias_offset(l);
    const auto& a_prev = ws_.a_[l];
    const auto& d1 = ws_.d1_[l + 1];
    std::fill(ws_.next_abar_.begin(), ws_.next_abar_.begin() + s.inputs, 0.0);
    for (std::size_t o = 0; o < s.outputs; ++o) {
      const double zbar = d1[o] * abar[o];
      gb[o] = zbar;
      if (zbar == 0.0) continue;
      double* gw_row = gw + o * s.inputs;
      const double* w_row = w + o * s.inputs;
      for (std::size_t i = 0; i < s.inputs; ++i) gw_row[i] += zbar * a_prev[i];
      if (l > 0)
        for (std::size_t i = 0; i < s.inputs; ++i) ws_.next_abar_[i] += zbar * w_row[i];
    }
    std::copy(ws_.next_abar_.begin(), ws_.next_abar_.begin() + s.inputs, abar.begin());
  }
}

void NetworkEvaluator::param_jvp(std::span<const double> x, std::span<const double> dtheta,
                                 std::span<double> dy) {
  const auto& layers = net_.layers();
  if (dtheta.size() != net_.parameter_count()) throw DimensionError("network: tangent size mismatch");
  if (dy.size() != net_.output_dim()) throw DimensionError("network: output dimension mismatch");
  const auto params = net_.parameters();
  // Forward-mode: carry (a, ȧ) where ȧ is the tangent induced by dθ.
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> adot(x.size(), 0.0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    const double* w = params.data() + net_.weight_offset(l);
    const double* b = params.data() + net_.bias_offset(l);
    const double* dw = dtheta.data() + net_.weight_offset(l);
    const double* db = dtheta.data() + net_.bias_offset(l);
    std::vector<double> na(s.outputs), nadot(s.outputs);
    for (std::size_t o = 0; o < s.outputs; ++o) {
      double z = b[o];
      double zdot = db[o];
      for (std::size_t i = 0; i < s.inputs; ++i) {
        z += w[o * s.inputs + i] * a[i];
        zdot += dw[o * s.inputs + i] * a[i] + w[o * s.inputs + i] * adot[i];
      }
      const ActivationValues act = activate(s.activation, z);
      na[o] = act.value;
      nadot[o] = act.first * zdot;
    }
    a = std::move(na);
    adot = std::move(nadot);
  }
  std::copy(adot.begin(), adot.end(), dy.begin());
}

double NetworkEvaluator::state_derivative_gradients(std::span<const double> x, std::size_t output,
                                                    std::size_t input, std::span<double> dg_dx,
                                                    std::span<double> dg_dtheta) {
  const std::size_t in = net_.input_dim();
  if (input >= in || output >= net_.output_dim())
    throw DimensionError("network: derivative index out of range");
  std::vector<double> seed(in, 0.0);
  seed[input] = 1.0;
  forward(x, 1, seed);
  return reverse_tangent(output, 0, dg_dx, dg_dtheta);
}

void NetworkEvaluator::forward_state_tangents(std::span<const double> x) {
  forward(x, net_.input_dim(), ws_.identity_);
}

double NetworkEvaluator::tangent_reverse(std::size_t output, std::size_t input,
                                         std::span<double> dg_dx, std::span<double> dg_dtheta) {
  if (input >= net_.input_dim() || output >= net_.output_dim())
    throw DimensionError("network: derivative index out of range");
  return reverse_tangent(output, input, dg_dx, dg_dtheta);
}

double NetworkEvaluator::reverse_tangent(std::size_t output, std::size_t direction,
                                         std::span<double> dg_dx, std::span<double> dg_dtheta) {
  const auto& layers = net_.layers();
  const std::size_t in = net_.input_dim();
  if (dg_dx.size() != in || dg_dtheta.size() != net_.parameter_count())
    throw DimensionError("network: gradient size mismatch");
  const std::size_t d = ws_.adot_.back().size() / net_.output_dim();
  const std::size_t k = direction;
  const double g = ws_.adot_.back()[output * d + k];

  // Reverse sweep over the forward-tangent computation, seeded on ȧ_L[output].
  const auto params = net_.parameters();
  auto& abar = ws_.abar_;
  auto& adotbar = ws_.adotbar_;
  std::fill(abar.begin(), abar.end(), 0.0);
  std::fill(adotbar.begin(), adotbar.end(), 0.0);
  adotbar[output] = 1.0;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& s = layers[l];
    const double* w = params.data() + net_.weight_offset(l);
    double* gw = dg_dtheta.data() + net_.weight_offset(l);
    double* gb = dg_dtheta.data() + net_.bias_offset(l);
    const auto& a_prev = ws_.a_[l];
    const double* adot_prev = ws_.adot_[l].data();
    const auto& d1 = ws_.d1_[l + 1];
    const auto& d2 = ws_.d2_[l + 1];
    const double* zdot = ws_.zdot_[l + 1].data();
    double* nab = ws_.next_abar_.data();
    double* nadb = ws_.next_adotbar_.data();
    std::fill(nab, nab + s.inputs, 0.0);
    std::fill(nadb, nadb + s.inputs, 0.0);
    for (std::size_t o = 0; o < s.outputs; ++o) {
      const double zdotbar = d1[o] * adotbar[o];
      const double zbar = d2[o] * zdot[o * d + k] * adotbar[o] + d1[o] * abar[o];
      gb[o] = zbar;
      double* gw_row = gw + o * s.inputs;
      const double* w_row = w + o * s.inputs;
      for (std::size_t i = 0; i < s.inputs; ++i) {
        gw_row[i] = zbar * a_prev[i] + zdotbar * adot_prev[i * d + k];
        nab[i] += w_row[i] * zbar;
        nadb[i] += w_row[i] * zdotbar;
      }
    }
    std::copy(nab, nab + s.inputs, abar.begin());
    std::copy(nadb, nadb + s.inputs, adotbar.begin());
  }
  std::copy(abar.begin(), abar.begin() + in, dg_dx.begin());
  return g;
}

HybridRhs::HybridRhs(DenseNetwork network, RhsAssembly assembly)
    : network_(std::move(network)), assembly_(assembly), ws_(network_) {
  if (assembly_ == RhsAssembly::hybrid_second_order) {
    if (network_.input_dim() != 2 || network_.output_dim() != 1)
      throw DimensionError("hybrid rhs: network must map 2 -> 1");
    state_dim_ = 2;
  } else {
    if (network_.input_dim() != network_.output_dim())
      throw DimensionError("full rhs: network must map n -> n");
    state_dim_ = network_.input_dim();
  }
  out_.resize(network_.output_dim());
  jac_.resize(network_.output_dim() * network_.input_dim());
}

void HybridRhs::check_state(std::span<const double> x) const {
  if (x.size() != state_dim_) throw DimensionError("rhs: state dimension mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw NumericError("rhs: non-finite state");
}

void HybridRhs::rhs(std::span<const double> x, std::span<double> dx) {
  check_state(x);
  if (dx.size() != state_dim_) throw DimensionError("rhs: derivative dimension mismatch");
  NetworkEvaluator eval(network_, ws_);
  if (assembly_ == RhsAssembly::hybrid_second_order) {
    eval.evaluate(x, out_);
    dx[0] = x[1];
    dx[1] = out_[0];
  } else {
    eval.evaluate(x, dx);
  }
}

void HybridRhs::rhs_with_jacobians(std::span<const double> x, std::span<double> dx,
                                   std::span<double> state_jacobian,
                                   std::span<double> param_jacobian) {
  check_state(x);
  const std::size_t n = state_dim_;
  const std::size_t p = network_.parameter_count();
  if (dx.size() != n || state_jacobian.size() != n * n || param_jacobian.size() != n * p)
    throw DimensionError("rhs: jacobian buffer size mismatch");
  NetworkEvaluator eval(network_, ws_);
  eval.evaluate_with_state_jacobian(x, out_, jac_);
  if (assembly_ == RhsAssembly::hybrid_second_order) {
    dx[0] = x[1];
    dx[1] = out_[0];
    state_jacobian[0] = 0.0;
    state_jacobian[1] = 1.0;
    state_jacobian[2] = jac_[0];
    state_jacobian[3] = jac_[1];
    std::fill(param_jacobian.begin(), param_jacobian.begin() + p, 0.0);
    eval.output_param_gradient(0, param_jacobian.subspan(p, p));
  } else {
    std::copy(out_.begin(), out_.end(), dx.begin());
    std::copy(jac_.begin(), jac_.end(), state_jacobian.begin());
    for (std::size_t o = 0; o < n; ++o) eval.output_param_gradient(o, param_jacobian.subspan(o * p, p));
  }
}

RealMatrix HybridRhs::system_matrix(std::span<const double> x) {
  check_state(x);
  NetworkEvaluator eval(network_, ws_);
  eval.evaluate_with_state_jacobian(x, out_, jac_);
  const std::size_t n = state_dim_;
  RealMatrix a(n, n);
  if (assembly_ == RhsAssembly::hybrid_second_order) {
    a(0, 1) = 1.0;
    a(1, 0) = jac_[0];
    a(1, 1) = jac_[1];
  } else {
    std::copy(jac_.begin(), jac_.end(), a.data().begin());
  }
  return a;
}

std::vector<double> HybridRhs::param_jvp(std::span<const double> x, std::span<const double> dtheta) {
  check_state(x);
  NetworkEvaluator eval(network_, ws_);
  std::vector<double> dy(network_.output_dim());
  eval.param_jvp(x, dtheta, dy);
  if (assembly_ == RhsAssembly::hybrid_second_order) return {0.0, dy[0]};
  return dy;
}

SystemMatrixDerivatives HybridRhs::system_matrix_derivatives(std::span<const double> x) {
  SystemMatrixDerivatives out;
  system_matrix_derivatives(x, out);
  return out;
}

void HybridRhs::system_matrix_derivatives(std::span<const double> x, SystemMatrixDerivatives& out) {
  check_state(x);
  const std::size_t n = state_dim_;
  const std::size_t p = network_.parameter_count();
  // Active rows are overwritten in full below, so reused buffers need no clearing.
  if (out.a.rows() != n || out.a.cols() != n) out.a = RealMatrix(n, n);
  if (out.da_dx.rows() != n * n || out.da_dx.cols() != n) out.da_dx = RealMatrix(n * n, n);
  if (out.da_dtheta.rows() != n * n || out.da_dtheta.cols() != p)
    out.da_dtheta = RealMatrix(n * n, p);
  NetworkEvaluator eval(network_, ws_);
  eval.forward_state_tangents(x);
  out.active_rows.clear();
  auto fill_entry = [&](std::size_t row, std::size_t col, std::size_t output) {
    const std::size_t r = row * n + col;
    out.a(row, col) = eval.tangent_reverse(output, col, out.da_dx.row(r), out.da_dtheta.row(r));
    out.active_rows.push_back(r);
  };
  if (assembly_ == RhsAssembly::hybrid_second_order) {
    out.a(0, 0) = 0.0;
    out.a(0, 1) = 1.0;
    fill_entry(1, 0, 0);
    fill_entry(1, 1, 0);
  } else {
    for (std::size_t o = 0; o < n; ++o)
      for (std::size_t k = 0; k < n; ++k) fill_entry(o, k, o);
  }
}

std::vector<double> rhs_eval(HybridRhs& rhs, std::span<const double> x) {
  std::vector<double> dx(rhs.state_dim());
  rhs.rhs(x, dx);
  return dx;
}

RealMatrix system_matrix(HybridRhs& rhs, std::span<const double> x) { return rhs.system_matrix(x); }

std::vector<double> rhs_param_jvp(HybridRhs& rhs, std::span<const double> x,
                                  std::span<const double> dtheta) {
  return rhs.param_jvp(x, dtheta);
}

namespace {

constexpr char kMagic[8] = {'E', 'I', 'N', 'O', 'D', 'E', 'P', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bits{};
  in.read(reinterpret_cast<char*>(bits.data()), sizeof(T));
  if (!in) throw ConfigError("parameter file: truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_parameters(std::ostream& out, const DenseNetwork& net) {
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& s : net.layers()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.inputs));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.outputs));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.activation));
  }
  put_le<std::uint64_t>(out, net.parameter_count());
  for (double v : net.parameters()) put_le<double>(out, v);
}

DenseNetwork read_parameters(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("parameter file: bad magic");
  const auto count = get_le<std::uint32_t>(in);
  if (count == 0 || count > 1024) throw ConfigError("parameter file: implausible layer count");
  std::vector<LayerShape> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    LayerShape s;
    s.inputs = get_le<std::uint32_t>(in);
    s.outputs = get_le<std::uint32_t>(in);
    const auto act = get_le<std::uint32_t>(in);
    if (act > 1) throw ConfigError("parameter file: unknown activation");
    s.activation = static_cast<Activation>(act);
    layers.push_back(s);
  }
  DenseNetwork net(layers);
  const auto n = get_le<std::uint64_t>(in);
  if (n != net.parameter_count()) throw ConfigError("parameter file: parameter count mismatch");
  std::vector<double> params(n);
  for (auto& v : params) v = get_le<double>(in);
  net.set_parameters(params);
  return net;
}

void save_parameters(const std::string& path, const DenseNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_parameters(out, net);
}

DenseNetwork load_parameters(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_parameters(in);
}

}  // namespace einode
