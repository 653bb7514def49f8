#include "sis/pipeline.hpp"

#include "sis/linalg.hpp"

#include <fmt/format.h>

namespace sis {

std::vector<FilterPrior> matched_priors(const std::vector<InitialCondition>& init) {
  std::vector<FilterPrior> out;
  out.reserve(init.size());
  for (const auto& ic : init) out.push_back({ic.mean, ic.second_moment()});
  return out;
}

std::vector<std::vector<Vector>> FilterRun::estimates() const {
  std::vector<std::vector<Vector>> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    std::vector<Vector> row;
    row.reserve(s.local.size());
    for (const auto& est : s.local) row.push_back(est.x_hat);
    out.push_back(std::move(row));
  }
  return out;
}

FilterRun run_filter(const ChainModel& model, const Trace& trace, const DropoutSchedule& schedule,
                     const std::vector<FilterPrior>& priors, InterconnectSource source) {
  std::vector<Matrix> moments;
  std::vector<Vector> means;
  for (const auto& p : priors) {
    moments.push_back(p.second_moment);
    means.push_back(p.mean);
  }
  FilterRun run;
  run.states.push_back(init_filter(model, moments, means));
  for (int t = 1; t <= trace.horizon; ++t) {
    const auto& prev = run.states.back();
    const auto& u = trace.u.at(t - 1);
    const auto& y = trace.y.at(t - 1);
    if (source == InterconnectSource::kEstimates) {
      run.states.push_back(step_all(model, prev, u, y, schedule));
    } else {
      InterconnectSolution truth{model.dims(1).n_wp, model.dims(1).n_wm, {}, {}};
      if (model.length() > 1) {
        truth.v = trace.v.at(t - 1);
        truth.w = trace.w.at(t - 1);
      }
      run.states.push_back(step_with_interconnect(model, prev, truth, u, y, schedule));
    }
  }
  return run;
}

FilterRun run_predictor(const ChainModel& model, const Trace& trace, const std::vector<FilterPrior>& priors,
                        InterconnectSource source) {
  return run_filter(model, trace, DropoutSchedule(0.0), priors, source);
}

std::vector<std::vector<Vector>> reference_kalman(const ChainModel& model, const Trace& trace,
                                                  const std::vector<FilterPrior>& priors) {
  const int sm = model.length();
  if (static_cast<int>(priors.size()) != sm) throw ShapeError("reference_kalman: one prior per index required");
  std::vector<Vector> x(sm);
  std::vector<Matrix> P(sm);
  for (int i = 0; i < sm; ++i) {
    x[i] = priors[i].mean;
    P[i] = priors[i].second_moment;
  }
  std::vector<std::vector<Vector>> out{x};
  for (int t = 1; t <= trace.horizon; ++t) {
    for (int i = 1; i <= sm; ++i) {
      const auto b = model.block_at(t, i);
      const Vector& u = trace.u[t - 1][i - 1];
      const Vector& y = trace.y[t - 1][i - 1];
      const Vector v = trace.v[t - 1][i - 1];
      Vector& xi = x[i - 1];
      Matrix& Pi = P[i - 1];

      const Matrix innovation_cov = b.J * Pi * b.J.transpose() + b.M;
      const auto gain_t = linalg::try_solve(innovation_cov, b.J * Pi.transpose());
      if (!gain_t) throw SingularityError("reference Kalman innovation covariance singular", t, i);
      const Matrix gain = gain_t->transpose();
      const Vector x_post = xi + gain * (y - b.J * xi - b.R * u);
      const Matrix P_post = Pi - gain * b.J * Pi;

      xi = b.A * x_post + b.B * v + b.C * u;
      Pi = b.A * P_post * b.A.transpose();
    }
    out.push_back(x);
  }
  return out;
}

double max_abs_deviation(const std::vector<std::vector<Vector>>& a, const std::vector<std::vector<Vector>>& b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_deviation: sequences differ in length");
  double dev = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) throw ShapeError("max_abs_deviation: S_m mismatch");
    for (std::size_t i = 0; i < a[t].size(); ++i) dev = std::max(dev, linalg::max_abs(a[t][i] - b[t][i]));
  }
  return dev;
}

}  // namespace sis
