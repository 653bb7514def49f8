#pragma once

#include "sis/chain_model.hpp"
#include "sis/dropout.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace sis {

/// Counter-based generator: the n-th output of a stream is SplitMix64's
/// finalizer applied to key + n·0x9E3779B97F4A7C15. Streams with different
/// keys are independent, and a state is two words, so it is cheap to copy.
struct Rng {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  /// Stream for (seed, purpose, index); all three are mixed into the key.
  static Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal, Box–Muller (cosine branch, two uniforms per draw).
  double normal();
};

/// Substream purposes.
enum class StreamPurpose : std::uint64_t { kInit = 1, kGamma = 2, kNoise = 3 };

struct GammaDraw {
  int gamma;
  Rng next;
};

/// Bernoulli(p) indicator. Always consumes exactly one uniform, so the stream
/// position does not depend on p. Throws ValidationError for p outside [0,1].
GammaDraw sample_gamma(Rng rng, double p);

/// Gaussian x(1,i) ~ N(mean, cov); cov = 0 gives a fixed initial state.
struct InitialCondition {
  Vector mean;
  Matrix cov;

  /// E[x·xᵀ] = cov + mean·meanᵀ.
  Matrix second_moment() const { return cov + mean * mean.transpose(); }
};

using InputRule = std::function<Vector(int t, int i)>;

/// Zero inputs sized from the model dims.
InputRule zero_inputs(const ChainModel& model);

struct Scenario {
  ChainModel model;
  int horizon = 1;
  DropoutSchedule schedule;
  std::uint64_t seed = 0;
  std::vector<InitialCondition> init;  // one per spatial index
  InputRule inputs;
};

/// Ground-truth record. Outer index is t−1, inner index i−1. x holds
/// t = 1..horizon+1, every other field t = 1..horizon.
struct Trace {
  std::uint64_t seed = 0;
  int horizon = 0;
  std::vector<std::vector<Vector>> x;
  std::vector<std::vector<Vector>> u;
  std::vector<std::vector<Vector>> v;
  std::vector<std::vector<Vector>> w;
  std::vector<std::vector<int>> gamma;
  std::vector<std::vector<Vector>> d;
  std::vector<std::vector<Vector>> y;

  int length() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }
};

/// Simulates the chain. Interconnections come from monolithic_solve on the true
/// states, so ground truth does not depend on the chain recursion. Identical
/// scenarios give bit-identical traces.
Trace simulate(const Scenario& scenario);

struct MseReport {
  std::vector<double> per_t;
  double aggregate = 0.0;
};

/// MSE(t) = (1/S_m)·Σᵢ ‖x(t,i) − x̂(t,i)‖², aggregate is the mean over t.
/// `estimates` is indexed like Trace::x.
MseReport mse(const Trace& trace, const std::vector<std::vector<Vector>>& estimates);

}  // namespace sis
