#include "circuits/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <queue>
#include <random>

namespace circuits {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Subproblem {
  BoxBounds box;
  PhaseMap phases;
  std::shared_ptr<NodeBounds> parent;  // bounds valid on this subdomain
};

double exact_row_value(const Network& net, const LinearConstraint& row, const Vec& x) {
  return row.coeffs.dot(forward(net, x)) + row.constant;
}

// Deterministic PGD on the violation margin over one box.
std::optional<Vec> attack_box(const Network& net, const BoxBounds& box,
                              const std::vector<LinearConstraint>& rows, int steps, int restarts,
                              std::mt19937_64& rng) {
  const Vec hw = box.halfwidth();
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vec best_x;
  double best_margin = -std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    Vec x(box.lo.size());
    if (r == 0) {
      x = box.center();
    } else {
      for (int i = 0; i < x.size(); ++i) x[i] = box.lo[i] + uni(rng) * (box.hi[i] - box.lo[i]);
    }
    auto score = [&](const Vec& point) {
      const Vec y = forward(net, point);
      int worst = 0;
      double margin = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
        const double v = rows[i].coeffs.dot(y) + rows[i].constant - rows[i].bound;
        if (v > margin) {
          margin = v;
          worst = i;
        }
      }
      if (margin > best_margin) {
        best_margin = margin;
        best_x = point;
      }
      return worst;
    };
    for (int step = 0; step < steps; ++step) {
      const int worst = score(x);
      const Vec g = input_gradient(net, x, rows[worst].coeffs);
      const double step_size = 2.5 / steps;
      for (int i = 0; i < x.size(); ++i) {
        const double dir = g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0);
        x[i] = std::clamp(x[i] + step_size * hw[i] * dir, box.lo[i], box.hi[i]);
      }
    }
    score(x);
  }
  if (best_margin > kComparisonSlack) return best_x;
  return std::nullopt;
}

struct BoxOutcome {
  Status status = Status::Certified;
  std::optional<Vec> witness;
  double violation = 0;
};

// Branch-and-bound over one box: ReLU-phase splitting first (widest
// unstable pre-activation interval), input bisection as the completeness
// fallback once every ReLU is decided but the affine corner check fails
// to produce a true violation.
BoxOutcome verify_box(const Network& net, const BoxBounds& box,
                      const std::vector<LinearConstraint>& rows, const VerifyBudget& budget,
                      Clock::time_point start, long& subproblems) {
  BoxOutcome out;
  std::vector<Subproblem> stack;
  stack.push_back({box, {}, nullptr});

  auto check_point = [&](const Vec& x) -> bool {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
      worst = std::max(worst, exact_row_value(net, row, x) - row.bound);
    }
    if (worst > kComparisonSlack) {
      out.status = Status::Falsified;
      out.witness = x;
      out.violation = worst;
      return true;
    }
    return false;
  };

  while (!stack.empty()) {
    if (seconds_since(start) > budget.timeout_s) {
      out.status = Status::Unknown;
      return out;
    }
    if (subproblems >= budget.max_subproblems) {
      out.status = Status::Unknown;
      return out;
    }
    Subproblem sp = std::move(stack.back());
    stack.pop_back();
    ++subproblems;

    detail::Analysis a = detail::analyze(net, sp.box, sp.phases, sp.parent.get());
    if (a.infeasible) continue;  // empty subdomain

    bool certified = true;
    bool exact_rows = true;
    std::vector<Vec> candidates;
    for (const auto& row : rows) {
      detail::LinearBound lb =
          detail::bound_output_row(net, sp.box, sp.phases, a.bounds, row.coeffs, row.constant);
      if (lb.upper > row.bound + kComparisonSlack) {
        certified = false;
        if (!lb.exact) exact_rows = false;
        if (candidates.size() < 4) candidates.push_back(lb.upper_argmax);
      }
    }
    if (certified) continue;

    for (const Vec& x : candidates) {
      if (check_point(x)) return out;
    }
    if (check_point(sp.box.center())) return out;

    const auto unstable = detail::unstable_relus(net, a.bounds, sp.phases);
    auto shared = std::make_shared<NodeBounds>(std::move(a.bounds));
    if (!unstable.empty()) {
      const auto [node, slot] = unstable.front();
      for (Phase phase : {Phase::On, Phase::Off}) {
        Subproblem child{sp.box, sp.phases, shared};
        child.phases[{node, slot}] = phase;
        stack.push_back(std::move(child));
      }
      continue;
    }

    // Fully decided yet inconclusive: the affine corner lay outside the
    // phase-constrained subdomain. Bisect the box; parent bounds only
    // carry over when they were phase-free.
    (void)exact_rows;
    int dim = 0;
    double widest = -1;
    for (int i = 0; i < sp.box.lo.size(); ++i) {
      const double w = sp.box.hi[i] - sp.box.lo[i];
      if (w > widest) {
        widest = w;
        dim = i;
      }
    }
    if (widest < 1e-13) {
      // Degenerate box that still resists a decision: give up soundly.
      out.status = Status::Unknown;
      return out;
    }
    const double mid = 0.5 * (sp.box.lo[dim] + sp.box.hi[dim]);
    const auto carry = sp.phases.empty() ? shared : nullptr;
    for (int half = 0; half < 2; ++half) {
      Subproblem child{sp.box, {}, carry};
      (half == 0 ? child.box.hi : child.box.lo)[dim] = mid;
      stack.push_back(std::move(child));
    }
  }
  return out;
}

}  // namespace

VerifyBudget VerifyBudget::from_env() {
  VerifyBudget b;
  if (const char* t = std::getenv("CIRCUITS_TIMEOUT_S")) {
    char* end = nullptr;
    const double v = std::strtod(t, &end);
    if (end != t && v > 0) b.timeout_s = v;
  }
  return b;
}

const char* status_name(Status s) {
  switch (s) {
    case Status::Certified: return "certified";
    case Status::Falsified: return "falsified";
    case Status::Unknown: return "unknown";
  }
  return "?";
}

Verdict verify(const SiameseQuery& query, const VerifyBudget& budget) {
  const auto start = Clock::now();
  Verdict verdict;
  verdict.status = Status::Certified;

  const int dim = query.net.input_dim();
  std::mt19937_64 rng(budget.seed);
  bool any_unknown = false;

  for (int bi = 0; bi < static_cast<int>(query.region.boxes.size()); ++bi) {
    const BoxBounds box = materialize(query.region.boxes[bi], dim);
    const auto rows = constraint_rows(query, bi);

    // Cheap falsification attempt before the search.
    if (auto w = attack_box(query.net, box, rows, 30, 3, rng)) {
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& row : rows) {
        worst = std::max(worst, exact_row_value(query.net, row, *w) - row.bound);
      }
      verdict.status = Status::Falsified;
      verdict.witness = *w;
      verdict.violation = worst;
      verdict.wall_s = seconds_since(start);
      return verdict;
    }

    BoxOutcome outcome = verify_box(query.net, box, rows, budget, start, verdict.subproblems);
    if (outcome.status == Status::Falsified) {
      verdict.status = Status::Falsified;
      verdict.witness = outcome.witness;
      verdict.violation = outcome.violation;
      verdict.wall_s = seconds_since(start);
      return verdict;
    }
    if (outcome.status == Status::Unknown) any_unknown = true;
  }
  if (any_unknown) {
    verdict.status = Status::Unknown;
    verdict.unknown_reason =
        seconds_since(start) > budget.timeout_s ? "timeout" : "budget";
  }
  verdict.wall_s = seconds_since(start);
  return verdict;
}

std::optional<Vec> attack(const SiameseQuery& query, int steps, int restarts,
                          std::uint64_t seed) {
  const int dim = query.net.input_dim();
  std::mt19937_64 rng(seed);
  for (int bi = 0; bi < static_cast<int>(query.region.boxes.size()); ++bi) {
    const BoxBounds box = materialize(query.region.boxes[bi], dim);
    const auto rows = constraint_rows(query, bi);
    if (auto w = attack_box(query.net, box, rows, steps, restarts, rng)) {
      return w;
    }
  }
  return std::nullopt;
}

namespace {

// Maximizes coeffs . f(x) over the box until ub - lb <= tol.
struct MaxResult {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool converged = false;
};

MaxResult bab_max(const Network& net, const BoxBounds& box, const Vec& coeffs, double tol,
                  const VerifyBudget& budget, Clock::time_point start, long& subproblems) {
  struct Item {
    double ub;
    long order;
    Subproblem sp;
  };
  auto cmp = [](const Item& a, const Item& b) {
    if (a.ub != b.ub) return a.ub < b.ub;
    return a.order > b.order;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> queue(cmp);

  MaxResult result;
  double stuck_ub = -std::numeric_limits<double>::infinity();
  long order = 0;

  auto eval_at = [&](const Vec& x) {
    result.lower = std::max(result.lower, coeffs.dot(forward(net, x)));
  };

  auto push = [&](Subproblem sp) {
    detail::Analysis a = detail::analyze(net, sp.box, sp.phases, sp.parent.get());
    if (a.infeasible) return;
    detail::LinearBound lb =
        detail::bound_output_row(net, sp.box, sp.phases, a.bounds, coeffs, 0.0);
    eval_at(lb.upper_argmax);
    eval_at(sp.box.center());
    sp.parent = std::make_shared<NodeBounds>(std::move(a.bounds));
    queue.push({lb.upper, order++, std::move(sp)});
  };

  push({box, {}, nullptr});
  while (!queue.empty()) {
    if (seconds_since(start) > budget.timeout_s || subproblems >= budget.max_subproblems) {
      result.upper = std::max(queue.top().ub, stuck_ub);
      return result;
    }
    Item item = queue.top();
    queue.pop();
    ++subproblems;
    if (item.ub <= result.lower + tol) {
      result.upper = std::max(item.ub, stuck_ub);
      result.converged = stuck_ub <= result.lower + tol;
      return result;
    }
    // Pure best-first input bisection: relaxation error shrinks with box
    // width and the queue keeps refinement focused on the maximizer.
    const Subproblem& sp = item.sp;
    int dim = 0;
    double widest = -1;
    for (int i = 0; i < sp.box.lo.size(); ++i) {
      const double w = sp.box.hi[i] - sp.box.lo[i];
      if (w > widest) {
        widest = w;
        dim = i;
      }
    }
    if (widest < 1e-13) {
      stuck_ub = std::max(stuck_ub, item.ub);
      continue;
    }
    const double mid = 0.5 * (sp.box.lo[dim] + sp.box.hi[dim]);
    for (int half = 0; half < 2; ++half) {
      Subproblem child{sp.box, {}, sp.parent};
      (half == 0 ? child.box.hi : child.box.lo)[dim] = mid;
      push(std::move(child));
    }
  }
  result.upper = std::max(result.lower, stuck_ub);
  result.converged = true;
  return result;
}

}  // namespace

RangeResult refined_output_range(const Network& net, const BoxBounds& box, double tol,
                                 const VerifyBudget& budget) {
  const auto start = Clock::now();
  RangeResult out;
  out.converged = true;
  const int d = net.output_dim();
  out.outputs.resize(d);
  for (int j = 0; j < d; ++j) {
    Vec up = Vec::Zero(d);
    up[j] = 1;
    MaxResult hi = bab_max(net, box, up, tol, budget, start, out.subproblems);
    Vec dn = Vec::Zero(d);
    dn[j] = -1;
    MaxResult lo = bab_max(net, box, dn, tol, budget, start, out.subproblems);
    out.outputs[j].lo = Vec::Constant(1, -lo.upper);
    out.outputs[j].hi = Vec::Constant(1, hi.upper);
    out.converged = out.converged && hi.converged && lo.converged;
  }
  return out;
}

}  // namespace circuits
