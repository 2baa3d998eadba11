#pragma once

// Dense feed-forward networks and the NeuralODE right-hand side built on them.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "einode/matrix.hpp"
#include "einode/ode_system.hpp"

namespace einode {

enum class Activation : std::uint32_t { identity = 0, tanh = 1 };

struct LayerShape {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  Activation activation = Activation::identity;

  bool operator==(const LayerShape&) const = default;
};

/// Dense tanh 2→32 followed by dense identity 32→1 (129 parameters).
std::vector<LayerShape> reference_layout();
/// 2→hidden (tanh) →1 (identity).
std::vector<LayerShape> single_hidden_layout(std::size_t hidden);

/// Parameters are stored flat: per layer the row-major weight (outputs×inputs), then the bias.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// Zero parameters.
  explicit DenseNetwork(std::vector<LayerShape> layers);
  DenseNetwork(std::vector<LayerShape> layers, std::vector<double> parameters);

  const std::vector<LayerShape>& layers() const noexcept { return layers_; }
  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().inputs; }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().outputs; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::size_t max_width() const noexcept { return max_width_; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> mutable_parameters() noexcept { return params_; }
  void set_parameters(std::span<const double> params);

  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_.at(layer) + layers_[layer].inputs * layers_[layer].outputs;
  }

 private:
  std::vector<LayerShape> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::size_t max_width_ = 0;
};

/// Weights uniform in ±sqrt(6/(fan_in+fan_out)), biases zero. Deterministic per seed.
DenseNetwork glorot_init(std::uint64_t seed, const std::vector<LayerShape>& layers);

/// Scratch buffers for network evaluation; sized for one network layout.
class NetworkWorkspace {
 public:
  NetworkWorkspace() = default;
  explicit NetworkWorkspace(const DenseNetwork& net);

 private:
  friend class NetworkEvaluator;
  std::vector<std::vector<double>> z_, a_;          // pre/post activation per layer (a_[0] = input)
  std::vector<std::vector<double>> d1_, d2_;        // σ'(z), σ''(z) per layer
  std::vector<double> identity_;                    // input_dim×input_dim seed
  std::vector<std::vector<double>> zdot_, adot_;    // tangents, width×directions
  std::vector<double> abar_, adotbar_, next_abar_, next_adotbar_;
};

/// Evaluation routines over one network; forward passes cache activations in the workspace.
class NetworkEvaluator {
 public:
  NetworkEvaluator(const DenseNetwork& net, NetworkWorkspace& ws) : net_(net), ws_(ws) {}

  void evaluate(std::span<const double> x, std::span<double> y);
  /// y and ∂y/∂x (outputs×inputs, row-major) via forward-mode tangents along each input.
  void evaluate_with_state_jacobian(std::span<const double> x, std::span<double> y,
                                    std::span<double> jacobian);
  /// ∂y_o/∂θ accumulated (overwritten) into grad; requires a preceding forward pass at x.
  void output_param_gradient(std::size_t output, std::span<double> grad);
  /// Directional derivative of y along the parameter tangent dtheta (forward mode).
  void param_jvp(std::span<const double> x, std::span<const double> dtheta, std::span<double> dy);
  /// g = ∂y_o/∂x_k with its gradients ∂g/∂x and ∂g/∂θ (forward tangent, then reverse sweep).
  double state_derivative_gradients(std::span<const double> x, std::size_t output,
                                    std::size_t input, std::span<double> dg_dx,
                                    std::span<double> dg_dtheta);
  /// Forward pass carrying tangents along every input; prepares tangent_reverse.
  void forward_state_tangents(std::span<const double> x);
  /// Gradients of ∂y_o/∂x_k from the tangents of the preceding forward_state_tangents.
  double tangent_reverse(std::size_t output, std::size_t input, std::span<double> dg_dx,
                         std::span<double> dg_dtheta);

 private:
  void forward(std::span<const double> x, std::size_t directions,
               std::span<const double> seed_tangents);
  double reverse_tangent(std::size_t output, std::size_t direction, std::span<double> dg_dx,
                         std::span<double> dg_dtheta);

  const DenseNetwork& net_;
  NetworkWorkspace& ws_;
};

/// How the network output becomes the state derivative.
enum class RhsAssembly {
  /// ẋ₁ = x₂, ẋ₂ = N(x) with N: 2→1.
  hybrid_second_order,
  /// ẋ = N(x) with N: n→n.
  full,
};

struct SystemMatrixDerivatives {
  RealMatrix a;         // n×n
  RealMatrix da_dx;     // n²×n, row j·n+l holds ∂A(j,l)/∂x
  RealMatrix da_dtheta; // n²×P, row j·n+l holds ∂A(j,l)/∂θ
  /// Rows of da_dx/da_dtheta that can be non-zero; the others are identically zero.
  std::vector<std::size_t> active_rows;
};

class HybridRhs final : public OdeSystem {
 public:
  explicit HybridRhs(DenseNetwork network,
                     RhsAssembly assembly = RhsAssembly::hybrid_second_order);

  const DenseNetwork& network() const noexcept { return network_; }
  void set_parameters(std::span<const double> params) { network_.set_parameters(params); }
  RhsAssembly assembly() const noexcept { return assembly_; }

  std::size_t state_dim() const override { return state_dim_; }
  std::size_t parameter_count() const override { return network_.parameter_count(); }
  void rhs(std::span<const double> x, std::span<double> dx) override;
  void rhs_with_jacobians(std::span<const double> x, std::span<double> dx,
                          std::span<double> state_jacobian,
                          std::span<double> param_jacobian) override;
  RealMatrix system_matrix(std::span<const double> x) override;

  std::vector<double> param_jvp(std::span<const double> x, std::span<const double> dtheta);
  SystemMatrixDerivatives system_matrix_derivatives(std::span<const double> x);
  /// In-place variant; reuses the buffers of `out` when they already have the right shape.
  void system_matrix_derivatives(std::span<const double> x, SystemMatrixDerivatives& out);

 private:
  void check_state(std::span<const double> x) const;

  DenseNetwork network_;
  RhsAssembly assembly_;
  std::size_t state_dim_;
  NetworkWorkspace ws_;
  std::vector<double> out_, jac_;
};

std::vector<double> rhs_eval(HybridRhs& rhs, std::span<const double> x);
RealMatrix system_matrix(HybridRhs& rhs, std::span<const double> x);
std::vector<double> rhs_param_jvp(HybridRhs& rhs, std::span<const double> x,
                                  std::span<const double> dtheta);

/// Parameter snapshot: "EINODEP1", u32 layer count, per layer u32 inputs/outputs/activation,
/// u64 parameter count, then the parameters as little-endian IEEE-754 doubles.
void write_parameters(std::ostream& out, const DenseNetwork& net);
DenseNetwork read_parameters(std::istream& in);
void save_parameters(const std::string& path, const DenseNetwork& net);
DenseNetwork load_parameters(const std::string& path);

}  // namespace einode
