#include "sis/simulate.hpp"

#include "sis/interconnect.hpp"
#include "sis/linalg.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace sis {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector gaussian(Rng& rng, const Matrix& sqrt_cov) {
  Vector xi(sqrt_cov.cols());
  for (Eigen::Index k = 0; k < xi.size(); ++k) xi(k) = rng.normal();
  return sqrt_cov * xi;
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  std::uint64_t key = mix64(seed + kGolden);
  key = mix64(key ^ (purpose * kGolden));
  key = mix64(key ^ ((index + 1) * 0xD1B54A32D192ED03ULL));
  return {key, 0};
}

std::uint64_t Rng::next_u64() { return mix64(key + (++counter) * kGolden); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

GammaDraw sample_gamma(Rng rng, double p) {
  checked_probability(p);
  const double u = rng.uniform();
  return {u < p ? 1 : 0, rng};
}

InputRule zero_inputs(const ChainModel& model) {
  std::vector<int> sizes;
  for (int i = 1; i <= model.length(); ++i) sizes.push_back(model.dims(i).n_u);
  return [sizes](int, int i) { return Vector::Zero(sizes.at(i - 1)); };
}

Trace simulate(const Scenario& sc) {
  const auto& model = sc.model;
  const int sm = model.length();
  if (sc.horizon < 1 || sc.horizon > model.horizon()) {
    throw ValidationError(fmt::format("scenario horizon {} outside [1,{}]", sc.horizon, model.horizon()));
  }
  if (static_cast<int>(sc.init.size()) != sm) {
    throw ValidationError(fmt::format("scenario has {} initial conditions for S_m={}", sc.init.size(), sm));
  }
  const InputRule inputs = sc.inputs ? sc.inputs : zero_inputs(model);

  std::vector<Rng> gamma_rng, noise_rng;
  Trace tr;
  tr.seed = sc.seed;
  tr.horizon = sc.horizon;
  tr.x.assign(sc.horizon + 1, std::vector<Vector>(sm));
  for (int i = 1; i <= sm; ++i) {
    const auto& ic = sc.init[i - 1];
    const int n = model.dims(i).n_x;
    if (ic.mean.size() != n || ic.cov.rows() != n || ic.cov.cols() != n) {
      throw ShapeError(fmt::format("initial condition shape does not match n_x at i={}", i));
    }
    if (!linalg::is_psd(ic.cov, 1e-12, 1e-10)) {
      throw ValidationError(fmt::format("initial covariance not symmetric PSD at i={}", i));
    }
    Rng init = Rng::stream(sc.seed, static_cast<std::uint64_t>(StreamPurpose::kInit), i);
    tr.x[0][i - 1] = ic.mean + gaussian(init, linalg::psd_sqrt(ic.cov));
    gamma_rng.push_back(Rng::stream(sc.seed, static_cast<std::uint64_t>(StreamPurpose::kGamma), i));
    noise_rng.push_back(Rng::stream(sc.seed, static_cast<std::uint64_t>(StreamPurpose::kNoise), i));
  }

  for (int t = 1; t <= sc.horizon; ++t) {
    const auto& x_t = tr.x[t - 1];
    std::vector<Vector> u_t(sm);
    for (int i = 1; i <= sm; ++i) {
      u_t[i - 1] = inputs(t, i);
      if (u_t[i - 1].size() != model.dims(i).n_u) {
        throw ShapeError(fmt::format("input size does not match n_u at (t={},i={})", t, i));
      }
    }
    InterconnectSolution sol;
    try {
      sol = monolithic_solve(model, t, x_t, u_t);
    } catch (const WellPosednessError& e) {
      throw WellPosednessError("simulation failed: ill-posed interconnection", e.t());
    }

    std::vector<Vector> v_t(sm), w_t(sm), d_t(sm), y_t(sm);
    std::vector<int> g_t(sm);
    for (int i = 1; i <= sm; ++i) {
      const auto b = model.block_at(t, i);
      v_t[i - 1] = sol.empty() ? Vector(Vector::Zero(b.dims.n_v())) : sol.v[i - 1];
      w_t[i - 1] = sol.empty() ? Vector(Vector::Zero(b.dims.n_v())) : sol.w[i - 1];
      tr.x[t][i - 1] = b.A * x_t[i - 1] + b.B * v_t[i - 1] + b.C * u_t[i - 1];

      const auto draw = sample_gamma(gamma_rng[i - 1], sc.schedule.at(t, i));
      gamma_rng[i - 1] = draw.next;
      g_t[i - 1] = draw.gamma;
      d_t[i - 1] = gaussian(noise_rng[i - 1], linalg::psd_sqrt(b.M));
      y_t[i - 1] = static_cast<double>(draw.gamma) * (b.J * x_t[i - 1]) + b.R * u_t[i - 1] + d_t[i - 1];
    }
    tr.u.push_back(std::move(u_t));
    tr.v.push_back(std::move(v_t));
    tr.w.push_back(std::move(w_t));
    tr.gamma.push_back(std::move(g_t));
    tr.d.push_back(std::move(d_t));
    tr.y.push_back(std::move(y_t));
  }
  return tr;
}

MseReport mse(const Trace& trace, const std::vector<std::vector<Vector>>& estimates) {
  if (estimates.size() != trace.x.size()) {
    throw ShapeError(fmt::format("mse: {} estimate time points for {} true states", estimates.size(),
                                 trace.x.size()));
  }
  MseReport r;
  double total = 0.0;
  for (std::size_t t = 0; t < trace.x.size(); ++t) {
    const auto& truth = trace.x[t];
    const auto& est = estimates[t];
    if (est.size() != truth.size()) throw ShapeError(fmt::format("mse: S_m mismatch at t={}", t + 1));
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (est[i].size() != truth[i].size()) {
        throw ShapeError(fmt::format("mse: state size mismatch at (t={},i={})", t + 1, i + 1));
      }
      sum += (truth[i] - est[i]).squaredNorm();
    }
    r.per_t.push_back(truth.empty() ? 0.0 : sum / static_cast<double>(truth.size()));
    total += r.per_t.back();
  }
  r.aggregate = r.per_t.empty() ? 0.0 : total / static_cast<double>(r.per_t.size());
  return r;
}

}  // namespace sis
