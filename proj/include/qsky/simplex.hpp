#pragma once

// Nelder-Mead downhill simplex with dimension-adaptive coefficients
// (Gao & Han, 2012). Header-only; the objective is any callable
// double(const Eigen::VectorXd&).

#include <Eigen/Dense>

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

namespace qsky {

struct SimplexOptions {
  double tolerance = 1e-12;       // required improvement of the mean vertex value ...
  int stall_iterations = 50;      // ... over this many iterations
  long max_evaluations = 200000;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  long evaluations = 0;
  long iterations = 0;
  bool converged = false;
};

/// Simplex of x0 and x0 + step·e_i.
inline std::vector<Eigen::VectorXd> axis_simplex(const Eigen::VectorXd& x0, double step) {
  std::vector<Eigen::VectorXd> s{x0};
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Eigen::VectorXd v = x0;
    v(i) += step;
    s.push_back(v);
  }
  return s;
}

template <typename Objective>
SimplexResult nelder_mead(Objective&& f, std::vector<Eigen::VectorXd> simplex, const SimplexOptions& opts = {}) {
  const auto n = static_cast<double>(simplex.front().size());
  const double alpha = 1.0, beta = 1.0 + 2.0 / n, gamma = 0.75 - 1.0 / (2.0 * n), delta = 1.0 - 1.0 / n;

  SimplexResult res;
  std::vector<double> fv(simplex.size());
  for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = f(simplex[i]);
  res.evaluations = static_cast<long>(simplex.size());

  std::vector<std::size_t> order(simplex.size());
  std::deque<double> history;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    return f(x);
  };

  while (res.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return fv[i] < fv[j]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    history.push_back(std::accumulate(fv.begin(), fv.end(), 0.0) / static_cast<double>(fv.size()));
    if (static_cast<int>(history.size()) > opts.stall_iterations) {
      if (history.front() - history.back() < opts.tolerance) {
        res.converged = true;
        break;
      }
      history.pop_front();
    }
    if (fv[worst] - fv[best] == 0.0 && res.iterations > 0) {
      res.converged = true;
      break;
    }
    ++res.iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(simplex.front().size());
    for (std::size_t i : order)
      if (i != worst) centroid += simplex[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + alpha * (centroid - simplex[worst]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = centroid + beta * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + gamma * (xr - centroid)) : Eigen::VectorXd(centroid - gamma * (centroid - simplex[worst]));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i : order) {
      if (i == best) continue;
      simplex[i] = simplex[best] + delta * (simplex[i] - simplex[best]);
      fv[i] = eval(simplex[i]);
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  res.x = simplex[static_cast<std::size_t>(it - fv.begin())];
  res.value = *it;
  return res;
}

}  // namespace qsky
