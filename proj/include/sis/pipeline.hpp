#pragma once

#include "sis/filter.hpp"
#include "sis/simulate.hpp"

#include <vector>

namespace sis {

/// Filter initialization for one subsystem.
struct FilterPrior {
  Vector mean;
  Matrix second_moment;
};

/// Prior matching the simulator's initial distribution: mean and E[x·xᵀ].
std::vector<FilterPrior> matched_priors(const std::vector<InitialCondition>& init);

/// Where Step 1 gets its states from.
enum class InterconnectSource {
  kEstimates,  // solve_interconnect on x̂ (the causal scheme)
  kTrace,      // the true interconnections recorded in the trace
};

struct FilterRun {
  std::vector<FilterState> states;  // t = 1..horizon+1

  /// x̂ indexed like Trace::x.
  std::vector<std::vector<Vector>> estimates() const;
};

/// Runs the two-step filter over every observation of the trace.
FilterRun run_filter(const ChainModel& model, const Trace& trace, const DropoutSchedule& schedule,
                     const std::vector<FilterPrior>& priors,
                     InterconnectSource source = InterconnectSource::kEstimates);

/// Prediction-only baseline: the same recursion with p ≡ 0, so observations
/// never enter.
FilterRun run_predictor(const ChainModel& model, const Trace& trace, const std::vector<FilterPrior>& priors,
                        InterconnectSource source = InterconnectSource::kEstimates);

/// Textbook Kalman filter without process noise (measurement update, then
/// time update), treating every observation as carrying the state and the
/// trace's interconnections as known inputs. Covariance starts at the prior's
/// second moment. Indexed like Trace::x.
std::vector<std::vector<Vector>> reference_kalman(const ChainModel& model, const Trace& trace,
                                                  const std::vector<FilterPrior>& priors);

/// Max absolute component difference between two estimate sequences.
double max_abs_deviation(const std::vector<std::vector<Vector>>& a, const std::vector<std::vector<Vector>>& b);

}  // namespace sis
