#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace evtmargin::detail {

struct SimplexResult {
  std::vector<double> point;
  double value = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Nelder-Mead downhill simplex with the standard coefficients
/// (reflect 1, expand 2, contract 0.5, shrink 0.5). Terminates when every
/// vertex agrees with the best one to `param_tol` per coordinate (relative
/// to max(1, |coordinate|)). Deterministic for a fixed start.
template <typename F>
SimplexResult nelder_mead(F&& objective, std::span<const double> start,
                          std::span<const double> step, double param_tol,
                          std::size_t max_iterations) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, std::vector<double>(start.begin(), start.end()));
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];

  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = objective(std::span<const double>(pts[i]));

  std::vector<std::size_t> order(n + 1);
  const auto sort_order = [&] {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  };

  std::vector<double> centroid(n), trial(n);
  SimplexResult result;
  for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
    sort_order();
    const std::size_t best = order[0], worst = order[n], second_worst = order[n - 1];

    double spread = 0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        spread = std::max(spread, std::abs(pts[i][j] - pts[best][j]) /
                                      std::max(1.0, std::abs(pts[best][j])));
    if (spread <= param_tol) {
      result.converged = true;
      break;
    }

    for (std::size_t j = 0; j < n; ++j) {
      double c = 0;
      for (std::size_t i = 0; i <= n; ++i)
        if (i != worst) c += pts[i][j];
      centroid[j] = c / static_cast<double>(n);
    }

    const auto move = [&](double coef) {
      for (std::size_t j = 0; j < n; ++j)
        trial[j] = centroid[j] + coef * (pts[worst][j] - centroid[j]);
      return objective(std::span<const double>(trial));
    };

    const double reflected = move(-1.0);
    if (reflected < vals[best]) {
      const std::vector<double> refl_pt = trial;
      const double expanded = move(-2.0);
      if (expanded < reflected) {
        pts[worst] = trial;
        vals[worst] = expanded;
      } else {
        pts[worst] = refl_pt;
        vals[worst] = reflected;
      }
    } else if (reflected < vals[second_worst]) {
      pts[worst] = trial;
      vals[worst] = reflected;
    } else {
      const double contracted = move(0.5);
      if (contracted < vals[worst]) {
        pts[worst] = trial;
        vals[worst] = contracted;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j)
            pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
          vals[i] = objective(std::span<const double>(pts[i]));
        }
      }
    }
  }

  sort_order();
  result.point = pts[order[0]];
  result.value = vals[order[0]];
  return result;
}

}  // namespace evtmargin::detail
