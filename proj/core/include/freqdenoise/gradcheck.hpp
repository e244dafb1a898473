#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "freqdenoise/graph.hpp"
#include "freqdenoise/rng.hpp"
#include "freqdenoise/tensor.hpp"

namespace freqdenoise {

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  std::size_t elements_checked = 0;
};

// Compares analytic reverse-mode gradients against central finite
// differences. The operation under test is supplied as a builder functor
// callable for any scalar type U:
//
//   Var<U> operator()(Graph<U>&, std::span<const Var<U>>) const;
//
// The builder's (possibly non-scalar) output is contracted to a scalar with
// a fixed random probe, which checks the action of the full Jacobian.
// Finite differences are always evaluated in double; the analytic side runs
// at the precision T under test, so the narrow-precision check measures
// exactly the rounding introduced by T.
//
// Relative deviation uses a norm-aware floor: elements whose gradient is
// orders of magnitude below the gradient's infinity norm are compared
// against that norm instead of their own magnitude, since their
// finite-difference reference carries absolute noise from the subtraction.
template <class T, class Builder>
GradCheckReport grad_check(Builder build,
                           const std::vector<Tensor<double>>& inputs,
                           double tol, double fd_step = 1e-5,
                           std::uint64_t probe_seed = 0x70726F6265ULL) {
  // Discover the output shape, then fix the probe.
  std::vector<std::size_t> out_shape;
  {
    Graph<double> g;
    std::vector<Var<double>> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(g.leaf(t));
    Var<double> out =
        build(g, std::span<const Var<double>>(leaves.data(), leaves.size()));
    out_shape = g.value(out).shape();
  }
  Tensor<double> probe = [&] {
    std::size_t n = 1;
    for (std::size_t d : out_shape) n *= d;
    SplitMix64 rng = derive_stream(probe_seed, {n});
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor<double>::wrap(out_shape, std::move(v));
  }();

  auto eval_probed = [&](const std::vector<Tensor<double>>& ins) -> double {
    Graph<double> g;
    std::vector<Var<double>> leaves;
    leaves.reserve(ins.size());
    for (const auto& t : ins) leaves.push_back(g.leaf(t));
    Var<double> out =
        build(g, std::span<const Var<double>>(leaves.data(), leaves.size()));
    Var<double> p = g.leaf(probe);
    Var<double> l =
        g.reduce(g.elementwise(out, p, EwKind::Mul), ReduceKind::Sum);
    return g.value(l).at(0);
  };

  // Analytic gradients at precision T.
  std::vector<std::vector<double>> analytic(inputs.size());
  {
    Graph<T> g;
    std::vector<Var<T>> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(g.leaf(t.template cast<T>()));
    Var<T> out =
        build(g, std::span<const Var<T>>(leaves.data(), leaves.size()));
    Var<T> p = g.leaf(probe.template cast<T>());
    Var<T> l = g.reduce(g.elementwise(out, p, EwKind::Mul), ReduceKind::Sum);
    GradientMap<T> grads = g.backward(l);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Tensor<T>& gt = grads.at(leaves[i]);
      analytic[i].assign(gt.data().begin(), gt.data().end());
    }
  }

  // Central differences in double.
  std::vector<std::vector<double>> fd(inputs.size());
  double grad_scale = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    fd[i].resize(inputs[i].size());
    for (std::size_t e = 0; e < inputs[i].size(); ++e) {
      std::vector<Tensor<double>> plus = inputs;
      std::vector<Tensor<double>> minus = inputs;
      std::vector<double> dp(inputs[i].data().begin(),
                             inputs[i].data().end());
      std::vector<double> dm = dp;
      dp[e] += fd_step;
      dm[e] -= fd_step;
      plus[i] = Tensor<double>::wrap(inputs[i].shape(), std::move(dp));
      minus[i] = Tensor<double>::wrap(inputs[i].shape(), std::move(dm));
      fd[i][e] = (eval_probed(plus) - eval_probed(minus)) / (2.0 * fd_step);
      grad_scale = std::max(grad_scale, std::abs(fd[i][e]));
      grad_scale = std::max(grad_scale, std::abs(analytic[i][e]));
    }
  }

  GradCheckReport report;
  const double floor = std::max(1e-12, 1e-2 * grad_scale);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t e = 0; e < fd[i].size(); ++e) {
      const double a = analytic[i][e];
      const double f = fd[i][e];
      const double denom = std::max({std::abs(a), std::abs(f), floor});
      report.max_rel_error =
          std::max(report.max_rel_error, std::abs(a - f) / denom);
      ++report.elements_checked;
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace freqdenoise
