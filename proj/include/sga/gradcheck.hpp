#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "sga/autodiff.hpp"
#include "sga/optim.hpp"
#include "sga/rng.hpp"

namespace sga::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

/// Compares backward() against central finite differences on `probes`
/// parameter entries. Probes cycle through the parameter tensors in order and
/// pick a random entry of each. `loss_fn` must rebuild the forward graph from
/// the current parameter values on every call and be deterministic.
inline GradCheckResult grad_check(const std::function<Var<double>()>& loss_fn, ParamSet<double>& params,
                                  std::size_t probes, double eps = 1e-4, std::uint64_t seed = 0) {
  auto eval = [&]() {
    const double v = loss_fn()->value[0];
    if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite loss");
    return v;
  };

  params.zero_grad();
  auto loss = loss_fn();
  if (!std::isfinite(loss->value[0])) throw NonFiniteError("grad_check: non-finite loss");
  backward(loss);
  std::vector<Tensor<double>> analytic;
  for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params[i].grad);
  params.zero_grad();

  GradCheckResult res;
  const std::size_t total = params.scalar_count();
  if (total == 0) return res;
  Rng rng(seed);
  for (std::size_t probe = 0; probe < probes; ++probe) {
    const std::size_t pi = probe % params.size();
    if (params[pi].value.size() == 0) continue;
    const std::size_t flat = static_cast<std::size_t>(rng.below(params[pi].value.size()));
    auto& p = params[pi];
    const double orig = p.value[flat];
    p.value[flat] = orig + eps;
    const double up = eval();
    p.value[flat] = orig - eps;
    const double down = eval();
    p.value[flat] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[pi][flat] - numeric) / std::max(1.0, std::abs(numeric));
    if (err > res.max_rel_error || res.probes == 0) {
      res.max_rel_error = std::max(res.max_rel_error, err);
      res.worst_param = p.name;
      res.worst_index = flat;
    }
    ++res.probes;
  }
  return res;
}

}  // namespace sga::ad
