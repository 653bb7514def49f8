#pragma once

#include "sis/chain_model.hpp"
#include "sis/dropout.hpp"
#include "sis/interconnect.hpp"

#include <span>
#include <vector>

namespace sis {

/// Gains of one local sub-filter: x̂(t+1) = xi1·x̂ + xi2·(y − c2) + c1.
struct GainPair {
  Matrix xi1;
  Matrix xi2;
};

/// Estimate and moment recursion state of one subsystem. S propagates the
/// unconditional second moment of x, T the error-moment term used in the gain.
struct LocalEstimate {
  Vector x_hat;
  Matrix S;
  Matrix T;
};

struct FilterState {
  int t = 1;
  std::vector<LocalEstimate> local;  // 0-based spatial index
};

/// xi2 = p·A·T·Jᵀ·[M + p²·J·T·Jᵀ + (p − p²)·J·S·Jᵀ]⁻¹, xi1 = A − p·xi2·J.
/// The bracket is symmetrized before the solve. At p = 0 the gain is exactly
/// zero and no inversion happens. Throws SingularityError naming (t, i) when
/// the bracket is singular.
GainPair gains(const SubsystemBlock& block, double p, const Matrix& S, const Matrix& T, int t = 0, int i = 0);

/// One step of the local recursion given the known parts c1 = B·v + C·u and
/// c2 = R·u.
LocalEstimate update(const LocalEstimate& est, const SubsystemBlock& block, double p, const Vector& y,
                     const Vector& c1, const Vector& c2, int t = 0, int i = 0);

/// x̂(1,i) = initial_mean(i), S(1,i) = T(1,i) = second_moment(i).
/// Throws ValidationError on a non-PSD second moment.
FilterState init_filter(const ChainModel& model, std::span<const Matrix> second_moment,
                        std::span<const Vector> initial_mean);

/// Step 2 for all subsystems with the interconnection vectors supplied by the
/// caller (e.g. computed from true states).
FilterState step_with_interconnect(const ChainModel& model, const FilterState& state,
                                   const InterconnectSolution& interconnect, std::span<const Vector> u_all,
                                   std::span<const Vector> y_all, const DropoutSchedule& schedule);

/// Full two-step update: solve_interconnect on the current estimates, then
/// the local recursion for every subsystem.
FilterState step_all(const ChainModel& model, const FilterState& state, std::span<const Vector> u_all,
                     std::span<const Vector> y_all, const DropoutSchedule& schedule);

}  // namespace sis
