#pragma once

#include "circuits/discover.hpp"
#include "circuits/hitting.hpp"
#include "circuits/models.hpp"
#include "circuits/oracle.hpp"
#include "circuits/serialize.hpp"

#include <map>
#include <optional>
#include <string>

namespace circuits {

/// Descriptor for one faithfulness predicate in a config file.
struct PredicateSpec {
  std::string kind = "sampling";  // sampling | input_robust | patching_robust |
                                  // combined | combined_box
  std::string metric = "logit_diff";
  double delta = 1.0;
  double alpha_frac = 0.5;        // winner_runner
  std::string patch = "zero";     // zero | mean
  double eps = 0.05;              // input/patching radius
  double eps_in = 0.05;           // combined
  double eps_patch = 0.08;        // combined
  double timeout_s = 45.0;
  bool clamp01 = true;            // intersect regions with [0,1]^n
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  ModelSpec model;
  std::string model_file;         // overrides the builder when set
  int batch_count = 20;
  int batch_k = 3;
  std::string algorithm = "greedy";  // greedy | exhaustive | binary | mhs | none
  int t_max = 3;
  PredicateSpec discovery;
  PredicateSpec evaluation;
  std::string output_dir;
};

ExperimentConfig config_from_text(const std::string& text);
std::string to_text(const ExperimentConfig& config);

struct BatchRecord {
  int batch_id = 0;
  int label = 0;
  std::vector<Vec> anchors;
  std::set<ComponentId> circuit;
  double discovery_s = 0;
  long evals = 0;
  Status eval_status = Status::Unknown;
  bool attack_found = false;
  double eval_s = 0;
  std::size_t mhs_size = 0;  // algorithm == mhs
  std::string error;
  std::vector<std::pair<double, std::size_t>> size_over_time;
};

struct RunReport {
  std::vector<BatchRecord> records;
  double mean_size = 0, std_size = 0;
  double mean_time = 0, std_time = 0;
  double robustness_pct = 0;  // over decided batches only
  double robustness_se = 0;
  int decided = 0;
  int unknowns = 0;  // excluded from the percentage, counted separately
  int failed = 0;
};

/// Builds the runtime predicate for one batch. Mean patching draws its
/// values from `mean_pool` (empirical means).
Predicate make_predicate(const Network& net, const PredicateSpec& spec,
                         const std::vector<Vec>& anchors, int gold_class,
                         const std::vector<Vec>& mean_pool);

struct EvalOutcome {
  Verdict verdict;
  bool attack_found = false;
};

/// Certified-robustness evaluation of a circuit under the spec: verify
/// the matching siamese encoding; on non-certified outcomes also run the
/// attack and record whether it produced a validated witness.
EvalOutcome evaluate_circuit(const Network& net, const std::set<ComponentId>& members,
                             const PredicateSpec& spec, const std::vector<Vec>& anchors,
                             int gold_class, const std::vector<Vec>& mean_pool,
                             std::uint64_t seed);

/// Runs the configured discovery + evaluation over seeded batches.
/// Batches are independent; failures mark the record and do not abort.
/// Writes circuit files, records, figure data and the rendered table to
/// output_dir when set.
RunReport run_experiment(const ExperimentConfig& config);

/// Text table: one row per method aggregate (time, size, robustness).
std::string render_table(const RunReport& report, const std::string& label);

}  // namespace circuits
