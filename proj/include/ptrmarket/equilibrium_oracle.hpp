#pragma once

// Independent verification engines. Nothing in here knows any closed form:
// equilibria are found by projected best-response iteration with numeric 1-D
// maximization, and optimality is checked with central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptrmarket/errors.hpp"

namespace ptrmarket::oracle {

inline constexpr double kFdRelativeStep = 1e-5;

struct Maximum1d {
  double argmax = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Maximizes a unimodal `f` on [lo, hi]: golden-section narrowing followed by
/// a few parabolic refinement steps, each accepted only if it improves f.
template <class F>
Maximum1d maximize_1d(F&& f, double lo, double hi, double tolerance = 1e-11) {
  constexpr double kInvPhi = 0.6180339887498949;
  Maximum1d out;
  auto eval = [&](double x) {
    ++out.evaluations;
    return f(x);
  };
  if (hi < lo) std::swap(lo, hi);
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});

  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval(c), fd = eval(d);
  while (b - a > tolerance * scale) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval(d);
    }
  }
  double best = 0.5 * (a + b);
  double fbest = eval(best);
  for (double edge : {lo, hi}) {
    const double fe = eval(edge);
    if (fe > fbest) {
      best = edge;
      fbest = fe;
    }
  }

  // Parabolic polish. Golden section alone stalls near sqrt(epsilon) because
  // values at the top are flat to rounding; a parabola through points a fixed
  // distance apart locates the vertex of a quadratic to rounding instead.
  // A vertex is kept unless it is worse by more than value noise.
  const double h = 1e-2 * std::max(1.0, std::abs(best));
  for (int iter = 0; iter < 4; ++iter) {
    // Evenly spaced stencil, shifted inward near an edge. A lopsided one
    // amplifies rounding when the argmax sits just inside a bound.
    double left = best - h, right = best + h;
    if (left < lo) right += lo - left, left = lo;
    if (right > hi) left -= right - hi, right = hi;
    left = std::max(lo, left);
    if (right - left < 1e-14 * scale) break;
    const double mid = 0.5 * (left + right);
    const double fl = eval(left), fm = eval(mid), fr = eval(right);
    const double d1 = (fm - fl) / (mid - left);
    const double d2 = (fr - fm) / (right - mid);
    const double curvature = (d2 - d1) / (right - left);
    if (!(curvature < 0.0)) break;
    const double vertex = std::clamp(0.5 * (left + mid) - d1 / (2.0 * curvature), lo, hi);
    const double fv = eval(vertex);
    const double noise = 1e-11 * std::max(1.0, std::abs(fbest));
    if (!(fv >= fbest - noise)) break;
    const double moved = std::abs(vertex - best);
    best = vertex;
    fbest = std::max(fv, fbest);
    if (moved <= 1e-15 * scale) break;
  }
  out.argmax = best;
  out.value = fbest;
  return out;
}

using ProfitFn = std::function<double(std::span<const double>)>;

struct Box {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
};

/// A simultaneous-move game over scalar actions. `profits[i]` is player i's
/// payoff as a pure function of the joint action vector.
struct GameSpec {
  std::vector<ProfitFn> profits;
  std::vector<Box> boxes;
  /// Upper end of the 1-D search for players with an unbounded box.
  double search_upper = 100.0;
  /// Relaxation on each best-response move, in (0, 1].
  double step = 1.0;
  double tolerance = 1e-12;
  int max_sweeps = 5000;
  /// Rounding in the 1-D search can leave a small limit cycle. A run of
  /// `stall_sweeps` consecutive sweeps with change below
  /// `stall_factor * tolerance` also counts as settled.
  double stall_factor = 100.0;
  int stall_sweeps = 30;

  std::size_t players() const { return profits.size(); }
};

struct BestResponseResult {
  std::vector<double> actions;
  int sweeps = 0;
  double last_change = 0.0;
  /// Negative second difference of every player's own profit at the result.
  bool concave = true;
};

/// Best response of `player` to the other entries of `joint`.
inline double best_reply(const GameSpec& game, std::size_t player, std::vector<double>& joint) {
  const Box box = player < game.boxes.size() ? game.boxes[player] : Box{};
  const double hi = std::isfinite(box.upper) ? box.upper : std::max(box.lower, game.search_upper);
  const double saved = joint[player];
  auto objective = [&](double t) {
    joint[player] = t;
    return game.profits[player](joint);
  };
  const auto best = maximize_1d(objective, box.lower, hi);
  joint[player] = saved;
  return best.argmax;
}

inline std::string fmt_change(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Cyclic (Gauss-Seidel) projected best-response iteration.
inline BestResponseResult best_response(const GameSpec& game, std::vector<double> start) {
  if (!(game.step > 0.0) || !(game.tolerance > 0.0)) {
    throw SolverError(ErrorKind::InvalidCase, "best_response needs positive step and tolerance");
  }
  BestResponseResult out;
  std::vector<double>& x = start;
  x.resize(game.players(), 0.0);
  int quiet = 0;
  for (out.sweeps = 1; out.sweeps <= game.max_sweeps; ++out.sweeps) {
    double change = 0.0;
    for (std::size_t i = 0; i < game.players(); ++i) {
      const double reply = best_reply(game, i, x);
      const double next = x[i] + game.step * (reply - x[i]);
      change = std::max(change, std::abs(next - x[i]));
      x[i] = next;
    }
    out.last_change = change;
    if (change < game.tolerance) break;
    quiet = change < game.stall_factor * game.tolerance ? quiet + 1 : 0;
    if (quiet >= game.stall_sweeps) break;
  }
  if (out.sweeps > game.max_sweeps) {
    throw SolverError(ErrorKind::NoConvergence,
                      "best-response iteration did not settle after " +
                          std::to_string(game.max_sweeps) + " sweeps (last change " +
                          fmt_change(out.last_change) + ")");
  }
  for (std::size_t i = 0; i < game.players(); ++i) {
    const Box box = i < game.boxes.size() ? game.boxes[i] : Box{};
    const double h = 1e-3 * std::max(1.0, std::abs(x[i]));
    double centre = x[i];
    if (centre - h < box.lower) centre = box.lower + h;
    if (std::isfinite(box.upper) && centre + h > box.upper) centre = box.upper - h;
    auto probe = x;
    auto at = [&](double t) {
      probe[i] = t;
      return game.profits[i](probe);
    };
    const double second = at(centre + h) - 2.0 * at(centre) + at(centre - h);
    out.concave = out.concave && second < 0.0;
  }
  out.actions = std::move(x);
  return out;
}

/// Central difference step for coordinate value `x`.
inline double fd_step(double x, double h = kFdRelativeStep) { return h * std::max(1.0, std::abs(x)); }

template <class F>
double fd_derivative(F&& fn, double x, double h = kFdRelativeStep) {
  const double step = fd_step(x, h);
  return (fn(x + step) - fn(x - step)) / (2.0 * step);
}

/// Central-difference gradient; coordinate k uses step h * max(1, |x_k|).
template <class F>
std::vector<double> fd_gradient(F&& fn, std::span<const double> at, double h = kFdRelativeStep) {
  std::vector<double> grad(at.size());
  std::vector<double> probe(at.begin(), at.end());
  for (std::size_t k = 0; k < at.size(); ++k) {
    const double step = fd_step(at[k], h);
    probe[k] = at[k] + step;
    const double up = fn(std::span<const double>(probe));
    probe[k] = at[k] - step;
    const double down = fn(std::span<const double>(probe));
    probe[k] = at[k];
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// Each player maximizes its own profit over its own action subject to an
/// optional upper bound on that action.
struct KktProblem {
  std::vector<ProfitFn> profits;
  std::vector<std::optional<double>> caps;
};

struct KktReport {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  std::vector<double> stationarity_by_player;
  bool passed = false;

  double worst() const { return std::max({stationarity, primal, dual, complementarity}); }
};

/// Residuals of the Lagrangian L_j = -profit_j + lambda_j (x_j - cap_j).
inline KktReport kkt_check(const KktProblem& problem, std::span<const double> solution,
                           std::span<const double> multipliers, double tol) {
  KktReport r;
  std::vector<double> probe(solution.begin(), solution.end());
  for (std::size_t j = 0; j < problem.profits.size(); ++j) {
    auto own = [&](double t) {
      probe[j] = t;
      const double v = problem.profits[j](probe);
      probe[j] = solution[j];
      return v;
    };
    const double marginal = fd_derivative(own, solution[j]);
    const double lambda = j < multipliers.size() ? multipliers[j] : 0.0;
    const double residual = std::abs(marginal - lambda);
    r.stationarity_by_player.push_back(residual);
    r.stationarity = std::max(r.stationarity, residual);
    r.dual = std::max(r.dual, std::max(0.0, -lambda));
    const auto cap = j < problem.caps.size() ? problem.caps[j] : std::nullopt;
    if (cap) {
      const double slack = *cap - solution[j];
      r.primal = std::max(r.primal, std::max(0.0, -slack));
      r.complementarity = std::max(r.complementarity, std::abs(lambda * slack));
    } else {
      r.complementarity = std::max(r.complementarity, std::abs(lambda) > 0.0 ? std::abs(lambda) : 0.0);
    }
  }
  r.passed = r.worst() < tol;
  return r;
}

}  // namespace ptrmarket::oracle
