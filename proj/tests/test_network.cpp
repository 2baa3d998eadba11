#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "einode/gradcheck.hpp"
#include "einode/network.hpp"

using namespace einode;

TEST_CASE("reference layout has 129 parameters") {
  const DenseNetwork net(reference_layout());
  CHECK(net.parameter_count() == 129);
  CHECK(net.input_dim() == 2);
  CHECK(net.output_dim() == 1);
  CHECK(net.max_width() == 32);
  CHECK(net.bias_offset(0) == 64);
  CHECK(net.weight_offset(1) == 96);
  CHECK(single_hidden_layout(8) == std::vector<LayerShape>{{2, 8, Activation::tanh},
                                                           {8, 1, Activation::identity}});
  CHECK_THROWS_AS(DenseNetwork({{2, 3, Activation::tanh}, {4, 1, Activation::identity}}),
                  DimensionError);
  CHECK_THROWS_AS(DenseNetwork(reference_layout(), std::vector<double>(3)), DimensionError);
}

TEST_CASE("Glorot initialization is bounded and deterministic") {
  const DenseNetwork a = glorot_init(42, reference_layout());
  const DenseNetwork b = glorot_init(42, reference_layout());
  const DenseNetwork c = glorot_init(43, reference_layout());
  CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  CHECK_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
  const double l0 = std::sqrt(6.0 / 34.0), l1 = std::sqrt(6.0 / 33.0);
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(a.parameters()[i]) <= l0);
  for (std::size_t i = 64; i < 96; ++i) CHECK(a.parameters()[i] == 0.0);
  for (std::size_t i = 96; i < 128; ++i) CHECK(std::abs(a.parameters()[i]) <= l1);
  CHECK(a.parameters()[128] == 0.0);
}

TEST_CASE("forward pass by hand") {
  // y = w2 · tanh(W1 x + b1) + b2 with one hidden unit.
  const DenseNetwork net({{2, 1, Activation::tanh}, {1, 1, Activation::identity}},
                         {0.5, -0.25, 0.1, 2.0, 0.3});
  NetworkWorkspace ws(net);
  NetworkEvaluator ev(net, ws);
  const std::vector<double> x{1.0, 2.0};
  std::vector<double> y(1), jac(2);
  ev.evaluate_with_state_jacobian(x, y, jac);
  const double z = 0.5 - 0.5 + 0.1;
  CHECK(y[0] == doctest::Approx(2.0 * std::tanh(z) + 0.3));
  const double s = 1.0 - std::tanh(z) * std::tanh(z);
  CHECK(jac[0] == doctest::Approx(2.0 * s * 0.5));
  CHECK(jac[1] == doctest::Approx(2.0 * s * -0.25));
}

TEST_CASE("hybrid right-hand side hard-wires the kinematic row") {
  HybridRhs rhs(glorot_init(1, reference_layout()));
  const std::vector<double> x{0.3, -0.7};
  const std::vector<double> dx = rhs_eval(rhs, x);
  CHECK(dx[0] == -0.7);
  const RealMatrix a = system_matrix(rhs, x);
  CHECK(a(0, 0) == 0.0);
  CHECK(a(0, 1) == 1.0);
  const SystemMatrixDerivatives d = rhs.system_matrix_derivatives(x);
  CHECK(d.active_rows == std::vector<std::size_t>{2, 3});
  for (std::size_t p = 0; p < rhs.parameter_count(); ++p) {
    CHECK(d.da_dtheta(0, p) == 0.0);
    CHECK(d.da_dtheta(1, p) == 0.0);
  }
}

TEST_CASE("full assembly maps n states to n derivatives") {
  HybridRhs rhs(glorot_init(2, {{2, 4, Activation::tanh}, {4, 2, Activation::identity}}),
                RhsAssembly::full);
  CHECK(rhs.state_dim() == 2);
  const std::vector<double> x{0.1, 0.2};
  CHECK(rhs_eval(rhs, x).size() == 2);
  CHECK_THROWS_AS(HybridRhs(glorot_init(2, reference_layout()), RhsAssembly::full), DimensionError);
}

TEST_CASE("derivative oracles") {
  CHECK(check_rhs_derivatives(20, 1).passed);
  CHECK(check_system_matrix_derivatives(20, 1).passed);
}

TEST_CASE("parameter tangent is the directional derivative") {
  HybridRhs rhs(glorot_init(5, reference_layout()));
  const std::vector<double> x{0.4, 0.9};
  std::vector<double> dtheta(rhs.parameter_count());
  for (std::size_t i = 0; i < dtheta.size(); ++i) dtheta[i] = std::sin(0.3 * i);
  const std::vector<double> jvp = rhs_param_jvp(rhs, x, dtheta);
  const double h = 1e-6;
  std::vector<double> p(rhs.network().parameters().begin(), rhs.network().parameters().end());
  auto at = [&](double s) {
    std::vector<double> q = p;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += s * dtheta[i];
    rhs.set_parameters(q);
    return rhs_eval(rhs, x)[1];
  };
  const double fd = (at(h) - at(-h)) / (2 * h);
  CHECK(jvp[1] == doctest::Approx(fd).epsilon(1e-7));
  CHECK(jvp[0] == 0.0);
}

TEST_CASE("parameter snapshots round-trip bitwise") {
  const DenseNetwork net = glorot_init(9, reference_layout());
  std::stringstream buf;
  write_parameters(buf, net);
  const DenseNetwork back = read_parameters(buf);
  CHECK(back.layers() == net.layers());
  CHECK(std::equal(back.parameters().begin(), back.parameters().end(), net.parameters().begin()));

  const auto path = std::filesystem::temp_directory_path() / "einode_params_test.bin";
  save_parameters(path.string(), net);
  const DenseNetwork file = load_parameters(path.string());
  CHECK(std::equal(file.parameters().begin(), file.parameters().end(), net.parameters().begin()));
  std::filesystem::remove(path);

  std::stringstream bad("NOTMAGIC");
  CHECK_THROWS_AS(read_parameters(bad), Error);
  CHECK_THROWS_AS(load_parameters("/nonexistent/params.bin"), Error);
}
