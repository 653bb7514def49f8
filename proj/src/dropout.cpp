#include "sis/dropout.hpp"

#include "sis/types.hpp"

#include <string>

namespace sis {

double checked_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probability " + std::to_string(p) + " outside [0,1]");
  return p;
}

DropoutSchedule::DropoutSchedule(double p) : default_p_(checked_probability(p)) {}

DropoutSchedule& DropoutSchedule::set_index(int i, double p) {
  per_index_[i] = checked_probability(p);
  return *this;
}

DropoutSchedule& DropoutSchedule::set(int t, int i, double p) {
  table_[{t, i}] = checked_probability(p);
  return *this;
}

double DropoutSchedule::at(int t, int i) const {
  if (const auto it = table_.find({t, i}); it != table_.end()) return it->second;
  if (const auto it = per_index_.find(i); it != per_index_.end()) return it->second;
  return default_p_;
}

}  // namespace sis
