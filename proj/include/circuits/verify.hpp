#pragma once

#include "circuits/bounds.hpp"
#include "circuits/encode.hpp"

#include <cstdint>
#include <optional>

namespace circuits {

/// Absolute slack absorbing floating-point noise: a spec with bound b is
/// satisfied at value v iff v <= b + kComparisonSlack.
inline constexpr double kComparisonSlack = 1e-9;

struct VerifyBudget {
  double timeout_s = 45.0;
  long max_subproblems = 400000;
  std::uint64_t seed = 0x5eed;

  /// Applies CIRCUITS_TIMEOUT_S when set in the environment.
  static VerifyBudget from_env();
};

enum class Status { Certified, Falsified, Unknown };

const char* status_name(Status s);

struct Verdict {
  Status status = Status::Unknown;
  std::optional<Vec> witness;   // Falsified: a concrete violating input
  double violation = 0;         // witness margin beyond the bound
  long subproblems = 0;
  double wall_s = 0;
  std::string unknown_reason;   // "timeout" or "budget"
};

/// Sound and complete verification of the query over its region.
/// Certified: the spec holds for every point of every box. Falsified: the
/// witness concretely violates the spec under exact forward evaluation.
/// Unknown only on exhausted budget. Union regions are certified iff every
/// box is; the first witness wins.
Verdict verify(const SiameseQuery& query, const VerifyBudget& budget = VerifyBudget::from_env());

/// Projected-gradient ascent on the violation margin, multi-restart.
/// Any returned witness has been re-checked by exact forward evaluation.
std::optional<Vec> attack(const SiameseQuery& query, int steps, int restarts,
                          std::uint64_t seed);

/// Branch-and-bound refinement of [min,max] for each output of `net` over
/// the box until the enclosure width is below tol (or budget runs out).
struct RangeResult {
  std::vector<Interval> outputs;  // per output slot: certified enclosure
  bool converged = false;
  long subproblems = 0;
};

RangeResult refined_output_range(const Network& net, const BoxBounds& box, double tol,
                                 const VerifyBudget& budget = VerifyBudget::from_env());

}  // namespace circuits
