#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/rng.hpp"
#include "ggcn/tensor.hpp"

namespace ggcn {

struct GradCheckOptions {
  double eps = 1e-5;             // central-difference step, must lie in [1e-6, 1e-3]
  std::size_t max_coords = 0;    // 0 = check every coordinate
  std::uint64_t seed = 0;        // used only when sampling coordinates
};

struct GradCheckIssue {
  std::string param;
  std::size_t index = 0;
  std::string note;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  // Smallest ReLU/max-pool switching margin seen on the recorded pass. A
  // margin comparable to eps means a perturbation may have crossed a kink
  // and the numeric estimate is unreliable; resample the inputs.
  double kink_margin = std::numeric_limits<double>::infinity();
  std::size_t coords_checked = 0;
  std::vector<GradCheckIssue> issues;  // non-finite evaluations, per coordinate

  bool passes(double tol) const { return issues.empty() && max_rel_error < tol; }
};

// Compares reverse-mode gradients of a deterministic scalar-valued function
// against central finite differences, coordinate by coordinate. Relative
// error uses max(1, |analytic|, |numeric|) as the denominator.
inline GradCheckResult grad_check(const std::function<Tensor()>& f,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  GradCheckOptions opt = {}) {
  if (!(opt.eps >= 1e-6 && opt.eps <= 1e-3)) {
    throw std::runtime_error("grad_check: eps must lie in [1e-6, 1e-3]");
  }
  GradCheckResult result;

  for (const auto& [name, p] : params) {
    (void)name;
    p.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f();
    tape.backward(loss);
    result.kink_margin = tape.kink_margin();
  }
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) {
    (void)name;
    analytic.push_back(p.grad());
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t i = 0; i < params[pi].second.numel(); ++i) coords.emplace_back(pi, i);
  }
  if (opt.max_coords > 0 && coords.size() > opt.max_coords) {
    Rng rng(opt.seed);
    for (std::size_t i = 0; i < opt.max_coords; ++i) {
      std::size_t j = i + rng.index(coords.size() - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(opt.max_coords);
  }

  // Pure forward (no active tape). Operations that detect a non-finite
  // result throw; fold that into the same per-coordinate report.
  auto eval = [&](std::string* note) {
    try {
      Tensor v = f();
      return v.value();
    } catch (const std::exception& e) {
      *note = e.what();
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  for (auto [pi, i] : coords) {
    Tensor p = params[pi].second;
    double original = p.values()[i];
    std::string note;
    p.values()[i] = original + opt.eps;
    double up = eval(&note);
    p.values()[i] = original - opt.eps;
    double down = eval(&note);
    p.values()[i] = original;
    ++result.coords_checked;

    if (!std::isfinite(up) || !std::isfinite(down)) {
      result.issues.push_back(
          {params[pi].first, i,
           note.empty() ? "non-finite value at perturbed point" : note});
      continue;
    }
    double numeric = (up - down) / (2.0 * opt.eps);
    double a = analytic[pi][i];
    double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = params[pi].first;
      result.worst_index = i;
      result.analytic_at_worst = a;
      result.numeric_at_worst = numeric;
    }
  }
  return result;
}

}  // namespace ggcn
