#pragma once

#include "sis/types.hpp"

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace sis {

/// Signal sizes of one subsystem. n_wp sizes the rightward pair (w₊ out, v₊ in),
/// n_wm the leftward pair (w₋ out, v₋ in).
struct SignalDims {
  int n_x = 1;
  int n_u = 0;
  int n_y = 0;
  int n_wp = 0;
  int n_wm = 0;

  constexpr int n_v() const { return n_wp + n_wm; }
  bool operator==(const SignalDims&) const = default;
};

/// Matrices of one subsystem at one time step:
///
///   x(t+1) = A x + B v + C u
///   w      = D x + G v + H u
///   y      = γ J x + R u + d,   d ~ N(0, M)
struct SubsystemBlock {
  SignalDims dims;
  Matrix A, B, C, D, G, H, J, R, M;

  /// All-zero block of the right shapes.
  static SubsystemBlock zeros(const SignalDims& dims);
};

/// (G11, G12, G21, G22) split of G; rows follow (w₊, w₋), columns (v₊, v₋).
struct GPartition {
  Matrix g11, g12, g21, g22;
};

/// Splits G by (n_wp, n_wm). Throws ShapeError when G is not n_v × n_v.
GPartition partition_g(const Matrix& g, const SignalDims& dims);

/// Piecewise-constant schedule: `base` everywhere except the listed time steps.
struct TimeTable {
  SubsystemBlock base;
  std::map<int, SubsystemBlock> overrides;
};

/// Arbitrary time-variation rule, t is 1-based.
using BlockRule = std::function<SubsystemBlock(int t)>;

using BlockSource = std::variant<TimeTable, BlockRule>;

/// One-dimensional chain of S_m subsystems over a finite horizon. Indices t and
/// i are 1-based. Immutable after construction; shape consistency is checked by
/// validate_chain, not by the constructor.
class ChainModel {
 public:
  ChainModel(int horizon, std::vector<SignalDims> dims, std::vector<BlockSource> sources);

  /// S_m copies of a time-invariant block.
  static ChainModel uniform(int length, int horizon, const SubsystemBlock& block);

  int length() const { return static_cast<int>(dims_.size()); }
  int horizon() const { return horizon_; }
  const SignalDims& dims(int i) const;
  const BlockSource& source(int i) const;

  /// Block at (t, i); the returned block carries this model's dims for index i.
  SubsystemBlock block_at(int t, int i) const;

  /// True when index i is a TimeTable without overrides.
  bool is_time_invariant(int i) const;
  bool is_time_invariant() const;

 private:
  void check_index(int t, int i) const;

  int horizon_;
  std::vector<SignalDims> dims_;
  std::vector<BlockSource> sources_;
};

/// Convenience for the 1-based free-function style of the rest of the library.
inline SubsystemBlock block_at(const ChainModel& model, int t, int i) { return model.block_at(t, i); }

struct Violation {
  enum class Kind {
    kBadDims,
    kShapeMismatch,
    kMNotPsd,
    kNeighborMismatch,
    kDegenerateCoupling,
    kG22Singular,
    kClosureSingular,
  };

  Kind kind;
  int t = 0;  // 0 when not tied to a time step
  int i = 0;  // 0 when not tied to an index
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  /// One line per violation, or "OK".
  std::string to_string() const;
};

/// Checks shapes, M PSD, neighbor compatibility, interior G22 invertibility and
/// the boundary closure matrix for every time step that can differ.
ValidationReport validate_chain(const ChainModel& model);

}  // namespace sis
