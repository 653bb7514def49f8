#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace sis {

/// Probability p(t,i) that the observation of subsystem i at time t carries the
/// state. Lookup precedence: per-(t,i) table, then per-index value, then the
/// broadcast default.
class DropoutSchedule {
 public:
  explicit DropoutSchedule(double p = 1.0);

  DropoutSchedule& set_index(int i, double p);
  DropoutSchedule& set(int t, int i, double p);

  double at(int t, int i) const;

  double default_p() const { return default_p_; }
  const std::map<int, double>& per_index() const { return per_index_; }
  const std::map<std::pair<int, int>, double>& table() const { return table_; }

 private:
  double default_p_;
  std::map<int, double> per_index_;
  std::map<std::pair<int, int>, double> table_;
};

/// Throws ValidationError unless 0 <= p <= 1.
double checked_probability(double p);

}  // namespace sis
