#include <doctest.h>

#include <numeric>

#include "support.hpp"
#include "vizrank/error.hpp"

using namespace vizrank;

namespace {

Architecture reduced() {
  Architecture arch;
  arch.input = {1, 9, 9};
  arch.layers = {LayerSpec::conv(3, 3, 2), LayerSpec::conv(4, 2, 1), LayerSpec::dense(5),
                 LayerSpec::dense(4, false)};
  return arch;
}

Network<double> random_network(const Architecture& arch, std::uint64_t seed) {
  Network<double> net(arch);
  Rng rng(seed);
  for (double& p : net.parameters()) p = rng.normal(0.0, 0.5);
  return net;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("standard architecture shapes and parameter count") {
  const auto arch = Architecture::standard();
  const auto shapes = arch.output_shapes();
  REQUIRE(shapes.size() == 5);
  CHECK(shapes[0] == Shape{8, 30, 30});
  CHECK(shapes[1] == Shape{16, 14, 14});
  CHECK(shapes[2] == Shape{32, 6, 6});
  CHECK(shapes[3] == Shape{128, 1, 1});
  CHECK(shapes[4] == Shape{26, 1, 1});
  // 8*25+8 + 16*8*9+16 + 32*16*9+32 + 1152*128+128 + 128*26+26
  CHECK(arch.parameter_count() == 156954);
  CHECK(arch.output_size() == kFeatureCount);
  CHECK(Architecture::from_json(nlohmann::json::parse(arch.to_json().dump())) == arch);
}

TEST_CASE("kernel larger than its input is rejected") {
  Architecture arch;
  arch.input = {1, 4, 4};
  arch.layers = {LayerSpec::conv(1, 5, 1)};
  CHECK_THROWS_AS(arch.output_shapes(), Error);
}

TEST_CASE("convolution forward pass against a hand-computed result") {
  Architecture arch;
  arch.input = {1, 4, 4};
  arch.layers = {LayerSpec::conv(1, 2, 2, false)};
  Network<double> net(arch);
  auto w = net.weights(0);
  REQUIRE(w.size() == 4);
  w[0] = 1;
  w[1] = 2;
  w[2] = 3;
  w[3] = 4;
  net.biases(0)[0] = 0.5;
  std::vector<double> input(16);
  std::iota(input.begin(), input.end(), 0.0);
  // windows {0,1,4,5} {2,3,6,7} {8,9,12,13} {10,11,14,15}
  const auto out = net.forward(input);
  REQUIRE(out.size() == 4);
  CHECK(out[0] == 0 + 2 + 12 + 20 + 0.5);
  CHECK(out[1] == 2 + 6 + 18 + 28 + 0.5);
  CHECK(out[2] == 8 + 18 + 36 + 52 + 0.5);
  CHECK(out[3] == 10 + 22 + 42 + 60 + 0.5);

  arch.layers[0].relu = true;
  Network<double> rectified(arch);
  rectified.biases(0)[0] = -1.0;
  for (double v : rectified.forward(input)) CHECK(v == 0.0);
}

TEST_CASE("dense layer gradients have the closed form g x^T and g") {
  Architecture arch;
  arch.input = {1, 1, 3};
  arch.layers = {LayerSpec::dense(2, false)};
  Network<double> net(arch);
  const std::vector<double> x{1.5, -2.0, 0.25};
  const std::vector<double> g{0.5, -3.0};
  Network<double>::Trace trace;
  net.forward(x, trace);
  std::vector<double> grad(net.parameters().size(), 0.0);
  net.backward(trace, g, grad);
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 3; ++i) CHECK(grad[o * 3 + i] == g[o] * x[i]);
    CHECK(grad[6 + o] == g[o]);
  }
  net.backward(trace, g, grad);
  CHECK(grad[0] == 2 * g[0] * x[0]);
}

TEST_CASE("backpropagation matches central differences in double precision") {
  const auto arch = reduced();
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const auto net = random_network(arch, 100 + trial);
    const auto input = random_vector(arch.input.size(), 200 + trial);
    const auto target = random_vector(arch.output_size(), 300 + trial);
    CHECK(grad_check(net, input, target) < 1e-4);
  }
}

TEST_CASE("gradient check also covers the output head") {
  Architecture arch = reduced();
  arch.layers.back().outputs = static_cast<int>(kFeatureCount);
  const auto net = random_network(arch, 5);
  const auto input = random_vector(arch.input.size(), 6);
  const auto target = random_vector(kFeatureCount, 7);
  FeatureVector means;
  for (std::size_t i = 0; i < kFeatureCount; ++i) means[i] = 0.1 + 0.03 * static_cast<double>(i);
  const auto head = OutputHead::from_means(means, 1e-3);
  CHECK(grad_check(net, input, target, {}, &head) < 1e-4);
}

TEST_CASE("forward rejects mismatched input and casts preserve structure") {
  const auto arch = reduced();
  const auto net = random_network(arch, 1);
  CHECK_THROWS_AS(net.forward(std::vector<double>(arch.input.size() + 1)), Error);
  const auto as_float = net.cast<float>();
  CHECK(as_float.architecture() == arch);
  const auto input = random_vector(arch.input.size(), 2);
  std::vector<float> input_f(input.begin(), input.end());
  const auto a = net.forward(input);
  const auto b = as_float.forward(input_f);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-4));
}

TEST_CASE("parameter layout: weights then biases per layer") {
  const auto arch = reduced();
  Network<double> net(arch);
  std::size_t total = 0;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    CHECK(net.weights(l).data() == net.parameters().data() + total);
    total += net.weights(l).size();
    CHECK(net.biases(l).data() == net.parameters().data() + total);
    CHECK(net.biases(l).size() == static_cast<std::size_t>(arch.layers[l].outputs));
    total += net.biases(l).size();
  }
  CHECK(total == arch.parameter_count());
}
