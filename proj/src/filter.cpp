#include "sis/filter.hpp"

#include "sis/linalg.hpp"

#include <fmt/format.h>

namespace sis {
namespace {

void require(bool cond, const char* what, int t, int i) {
  if (!cond) throw ShapeError(fmt::format("{} at (t={},i={})", what, t, i));
}

}  // namespace

GainPair gains(const SubsystemBlock& block, double p, const Matrix& S, const Matrix& T, int t, int i) {
  checked_probability(p);
  const auto& d = block.dims;
  require(S.rows() == d.n_x && S.cols() == d.n_x && T.rows() == d.n_x && T.cols() == d.n_x,
          "S/T shape does not match n_x", t, i);

  GainPair g;
  if (p == 0.0) {
    g.xi2 = Matrix::Zero(d.n_x, d.n_y);
    g.xi1 = block.A;
    return g;
  }
  const Matrix& A = block.A;
  const Matrix& J = block.J;
  Matrix bracket = block.M + p * p * (J * T * J.transpose()) + (p - p * p) * (J * S * J.transpose());
  bracket = 0.5 * (bracket + bracket.transpose()).eval();
  const Matrix numerator = p * A * T * J.transpose();
  const auto solved = linalg::try_solve(bracket, numerator.transpose());
  if (!solved) throw SingularityError("innovation matrix singular", t, i);
  g.xi2 = solved->transpose();
  g.xi1 = A - p * g.xi2 * J;
  return g;
}

LocalEstimate update(const LocalEstimate& est, const SubsystemBlock& block, double p, const Vector& y,
                     const Vector& c1, const Vector& c2, int t, int i) {
  const auto& d = block.dims;
  require(est.x_hat.size() == d.n_x, "x_hat size does not match n_x", t, i);
  require(y.size() == d.n_y && c2.size() == d.n_y, "observation size does not match n_y", t, i);
  require(c1.size() == d.n_x, "c1 size does not match n_x", t, i);

  const auto g = gains(block, p, est.S, est.T, t, i);
  LocalEstimate next;
  next.x_hat = g.xi1 * est.x_hat + g.xi2 * (y - c2) + c1;
  next.S = block.A * est.S * block.A.transpose();
  next.T = g.xi1 * est.T * block.A.transpose();
  return next;
}

FilterState init_filter(const ChainModel& model, std::span<const Matrix> second_moment,
                        std::span<const Vector> initial_mean) {
  const int sm = model.length();
  if (static_cast<int>(second_moment.size()) != sm || static_cast<int>(initial_mean.size()) != sm) {
    throw ShapeError(fmt::format("init_filter: expected {} moments and means", sm));
  }
  FilterState state;
  state.t = 1;
  for (int i = 1; i <= sm; ++i) {
    const int n = model.dims(i).n_x;
    const Matrix& m2 = second_moment[i - 1];
    const Vector& mean = initial_mean[i - 1];
    if (m2.rows() != n || m2.cols() != n || mean.size() != n) {
      throw ShapeError(fmt::format("init_filter: moment or mean shape does not match n_x at i={}", i));
    }
    if (!linalg::is_psd(m2, 1e-12, 1e-10)) {
      throw ValidationError(fmt::format("init_filter: second moment not symmetric PSD at i={}", i));
    }
    state.local.push_back({mean, m2, m2});
  }
  return state;
}

FilterState step_with_interconnect(const ChainModel& model, const FilterState& state,
                                   const InterconnectSolution& interconnect, std::span<const Vector> u_all,
                                   std::span<const Vector> y_all, const DropoutSchedule& schedule) {
  const int sm = model.length();
  const int t = state.t;
  if (static_cast<int>(state.local.size()) != sm || static_cast<int>(u_all.size()) != sm ||
      static_cast<int>(y_all.size()) != sm) {
    throw ShapeError(fmt::format("step: expected {} estimates, inputs and observations", sm));
  }
  if (!interconnect.empty() && interconnect.length() != sm) {
    throw ShapeError("step: interconnection solution length differs from S_m");
  }

  FilterState next;
  next.t = t + 1;
  next.local.reserve(sm);
  for (int i = 1; i <= sm; ++i) {
    const auto block = model.block_at(t, i);
    const Vector v = interconnect.empty() ? Vector::Zero(block.dims.n_v()) : interconnect.v[i - 1];
    require(v.size() == block.dims.n_v(), "interconnection size does not match n_wp+n_wm", t, i);
    const Vector& u = u_all[i - 1];
    require(u.size() == block.dims.n_u, "input size does not match n_u", t, i);
    const Vector c1 = block.B * v + block.C * u;
    const Vector c2 = block.R * u;
    next.local.push_back(update(state.local[i - 1], block, schedule.at(t, i), y_all[i - 1], c1, c2, t, i));
  }
  return next;
}

FilterState step_all(const ChainModel& model, const FilterState& state, std::span<const Vector> u_all,
                     std::span<const Vector> y_all, const DropoutSchedule& schedule) {
  std::vector<Vector> x_hat;
  x_hat.reserve(state.local.size());
  for (const auto& est : state.local) x_hat.push_back(est.x_hat);
  const auto v_hat = solve_interconnect(model, state.t, x_hat, u_all);
  return step_with_interconnect(model, state, v_hat, u_all, y_all, schedule);
}

}  // namespace sis
