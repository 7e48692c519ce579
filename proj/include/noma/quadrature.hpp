#pragma once

#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace noma {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
  bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (21 point) integration over the
/// consecutive intervals of `breaks`. The panel with the largest error
/// estimate is bisected until the summed estimate drops below
/// max(abs_tol, rel_tol * |value|) or `max_panels` is reached.
template <class F>
QuadratureResult integrate_adaptive(F&& f, std::span<const double> breaks, double abs_tol, double rel_tol,
                                    int max_panels = 4000) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;
  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  auto eval = [&](double a, double b) {
    double err = 0.0;
    const double v = Rule::integrate(f, a, b, 0, 0.0, &err);
    return Panel{a, b, v, err};
  };

  std::priority_queue<Panel> heap;
  QuadratureResult out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    Panel p = eval(breaks[i], breaks[i + 1]);
    out.value += p.value;
    out.error += p.error;
    heap.push(p);
  }
  out.panels = static_cast<int>(heap.size());
  while (!heap.empty()) {
    if (out.error <= std::max(abs_tol, rel_tol * std::abs(out.value))) {
      out.converged = true;
      break;
    }
    if (out.panels >= max_panels) break;
    const Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = eval(worst.a, mid);
    const Panel right = eval(mid, worst.b);
    out.value += left.value + right.value - worst.value;
    out.error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++out.panels;
  }
  if (heap.empty()) out.converged = true;
  // Re-sum to shed the drift of the incremental updates.
  double value = 0.0, error = 0.0;
  for (auto h = heap; !h.empty(); h.pop()) {
    value += h.top().value;
    error += h.top().error;
  }
  out.value = value;
  out.error = error;
  return out;
}

}  // namespace noma
