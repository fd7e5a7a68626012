#include "hjbnn/network.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "hjbnn/error.hpp"

namespace hjbnn {

void Architecture::validate() const {
  if (n_input < 1 || n_hidden < 1 || n_output < 1)
    throw ParameterError("architecture counts must all be at least 1");
}

std::string Architecture::to_string() const {
  return std::to_string(n_input) + "-" + std::to_string(n_hidden) + "-" + std::to_string(n_output);
}

Architecture parse_architecture(const std::string& text) {
  std::istringstream in(text);
  std::size_t a = 0, b = 0, c = 0;
  char d1 = 0, d2 = 0;
  if (!(in >> a >> d1 >> b >> d2 >> c) || d1 != '-' || d2 != '-' || !in.eof())
    throw ParseError("architecture must look like 3-4-1, got '" + text + "'");
  Architecture arch{a, b, c};
  arch.validate();
  return arch;
}

double sigmoid(double h) noexcept {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double s;
  if (h >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-h));
  } else {
    const double z = std::exp(h);
    s = z / (1.0 + z);
  }
  return s < lo ? lo : (s > hi ? hi : s);
}

void forward_into(const Network& net, std::span<const double> x, std::span<double> hidden,
                  std::span<double> output) {
  const auto& a = net.arch;
  for (std::size_t i = 0; i < a.n_hidden; ++i) {
    auto wi = net.w1.row(i);
    double h = 0.0;
    for (std::size_t k = 0; k < a.n_input; ++k) h += wi[k] * x[k];
    hidden[i] = sigmoid(h);
  }
  for (std::size_t o = 0; o < a.n_output; ++o) {
    auto wo = net.w2.row(o);
    double h = 0.0;
    for (std::size_t i = 0; i < a.n_hidden; ++i) h += wo[i] * hidden[i];
    output[o] = sigmoid(h);
  }
}

void forward_jacobian_into(const Network& net, std::span<const double> x,
                           std::span<double> hidden, std::span<double> output,
                           std::span<double> jac_rows) {
  forward_into(net, x, hidden, output);
  const auto& a = net.arch;
  const std::size_t nw = a.weight_count();
  const std::size_t hidden_offset = a.n_output * a.n_hidden;
  std::fill(jac_rows.begin(), jac_rows.begin() + a.n_output * nw, 0.0);
  for (std::size_t o = 0; o < a.n_output; ++o) {
    double* row = jac_rows.data() + o * nw;
    const double dy = output[o] * (1.0 - output[o]);
    auto wo = net.w2.row(o);
    double* out_block = row + o * a.n_hidden;
    for (std::size_t i = 0; i < a.n_hidden; ++i) out_block[i] = dy * hidden[i];
    for (std::size_t i = 0; i < a.n_hidden; ++i) {
      const double g = dy * wo[i] * hidden[i] * (1.0 - hidden[i]);
      double* hid_block = row + hidden_offset + i * a.n_input;
      for (std::size_t k = 0; k < a.n_input; ++k) hid_block[k] = g * x[k];
    }
  }
}

namespace {

void check_input(const Network& net, const Vector& x) {
  if (x.size() != net.arch.n_input)
    throw DimensionError("network input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(net.arch.n_input));
}

}  // namespace

ForwardTrace forward(const Network& net, const Vector& x) {
  check_input(net, x);
  ForwardTrace t{Vector(net.arch.n_hidden), Vector(net.arch.n_output)};
  forward_into(net, x.span(), t.hidden.span(), t.output.span());
  return t;
}

Matrix jacobian(const Network& net, const Vector& x) {
  check_input(net, x);
  Vector hidden(net.arch.n_hidden);
  Vector output(net.arch.n_output);
  Matrix j(net.arch.n_output, net.arch.weight_count());
  forward_jacobian_into(net, x.span(), hidden.span(), output.span(), j.span());
  return j;
}

Vector pack(const Network& net) {
  Vector w(net.arch.weight_count());
  auto out = w.span();
  auto w2 = net.w2.span();
  auto w1 = net.w1.span();
  std::copy(w2.begin(), w2.end(), out.begin());
  std::copy(w1.begin(), w1.end(), out.begin() + static_cast<std::ptrdiff_t>(w2.size()));
  return w;
}

Network unpack(const Architecture& arch, const Vector& weights) {
  arch.validate();
  if (weights.size() != arch.weight_count())
    throw DimensionError("unpack: weight vector has length " + std::to_string(weights.size()) +
                         ", expected " + std::to_string(arch.weight_count()));
  Network net{arch, Matrix(arch.n_hidden, arch.n_input), Matrix(arch.n_output, arch.n_hidden), {}};
  auto in = weights.span();
  const std::size_t n2 = arch.n_output * arch.n_hidden;
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n2), net.w2.span().begin());
  std::copy(in.begin() + static_cast<std::ptrdiff_t>(n2), in.end(), net.w1.span().begin());
  return net;
}

void add_scaled(Network& net, const Vector& u, double s) {
  if (u.size() != net.arch.weight_count()) throw DimensionError("add_scaled: update length mismatch");
  auto w2 = net.w2.span();
  auto w1 = net.w1.span();
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] += s * u[i];
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] += s * u[w2.size() + i];
}

Network init_weights(const Architecture& arch, std::uint64_t seed, double half_range) {
  arch.validate();
  if (!(half_range > 0.0) || !std::isfinite(half_range))
    throw ParameterError("init_weights: half_range must be positive");
  std::mt19937_64 gen(seed);
  Vector w(arch.weight_count());
  for (double& v : w) {
    // 53 random bits mapped to the open interval (0, 1).
    const double unit = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    v = half_range * (2.0 * unit - 1.0);
  }
  Network net = unpack(arch, w);
  net.init = InitInfo{seed, half_range};
  return net;
}

std::uint64_t weight_hash(const Network& net) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : pack(net)) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

Matrix finite_difference_jacobian(const Network& net, const Vector& x, double h) {
  if (!(h > 0.0)) throw ParameterError("finite_difference_jacobian: h must be positive");
  const Vector w = pack(net);
  Matrix out(net.arch.n_output, w.size());
  Vector probe = w;
  for (std::size_t k = 0; k < w.size(); ++k) {
    probe[k] = w[k] + h;
    const Vector up = forward(unpack(net.arch, probe), x).output;
    probe[k] = w[k] - h;
    const Vector down = forward(unpack(net.arch, probe), x).output;
    probe[k] = w[k];
    for (std::size_t o = 0; o < out.rows(); ++o) out(o, k) = (up[o] - down[o]) / (2.0 * h);
  }
  return out;
}

}  // namespace hjbnn
