#include "sis/interconnect.hpp"

#include "sis/linalg.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <ostream>

namespace sis {
namespace {

void require_shape(const Vector& v, int n, const char* what, int t, int i) {
  if (v.size() != n) {
    throw ShapeError(fmt::format("{} has size {}, expected {} at (t={},i={})", what, v.size(), n, t, i));
  }
}

void require_sizes(const ChainModel& model, std::span<const Vector> x_all, std::span<const Vector> u_all) {
  if (static_cast<int>(x_all.size()) != model.length() || static_cast<int>(u_all.size()) != model.length()) {
    throw ShapeError(fmt::format("expected {} state and input vectors, got {} and {}", model.length(),
                                 x_all.size(), u_all.size()));
  }
}

}  // namespace

Vector KnownPart::stacked() const {
  Vector z(z_plus.size() + z_minus.size());
  z << z_plus, z_minus;
  return z;
}

KnownPart known_part(const SubsystemBlock& block, const Vector& x, const Vector& u) {
  const auto& d = block.dims;
  if (x.size() != d.n_x || u.size() != d.n_u || block.D.rows() != d.n_v() || block.D.cols() != d.n_x ||
      block.H.rows() != d.n_v() || block.H.cols() != d.n_u) {
    throw ShapeError("known_part: x, u, D or H do not match the block dims");
  }
  const Vector z = block.D * x + block.H * u;
  return {z.head(d.n_wp), z.tail(d.n_wm)};
}

std::vector<KnownPart> known_parts(const ChainModel& model, int t, std::span<const Vector> x_all,
                                   std::span<const Vector> u_all) {
  require_sizes(model, x_all, u_all);
  std::vector<KnownPart> z;
  z.reserve(x_all.size());
  for (int i = 1; i <= model.length(); ++i) {
    z.push_back(known_part(model.block_at(t, i), x_all[i - 1], u_all[i - 1]));
  }
  return z;
}

PhiBeta phi_beta(const SubsystemBlock& block, const KnownPart& z, int t, int i) {
  const auto& d = block.dims;
  const auto [g11, g12, g21, g22] = partition_g(block.G, d);
  require_shape(z.z_plus, d.n_wp, "z_plus", t, i);
  require_shape(z.z_minus, d.n_wm, "z_minus", t, i);

  // One factorization of G22 serves G22⁻¹, G22⁻¹·G21 and G22⁻¹·z₋.
  Matrix rhs(d.n_wm, d.n_wm + d.n_wp + 1);
  rhs << Matrix::Identity(d.n_wm, d.n_wm), g21, z.z_minus;
  const auto solved = linalg::try_solve(g22, rhs);
  if (!solved) throw SingularityError("G22 singular", t, i);
  const Matrix g22_inv = solved->leftCols(d.n_wm);
  const Matrix g22_inv_g21 = solved->middleCols(d.n_wm, d.n_wp);
  const Vector g22_inv_zm = solved->rightCols(1);

  PhiBeta out;
  out.phi.resize(d.n_v(), d.n_v());
  out.phi << g11 - g12 * g22_inv_g21, g12 * g22_inv, -g22_inv_g21, g22_inv;
  out.beta.resize(d.n_v());
  out.beta << z.z_plus - g12 * g22_inv_zm, -g22_inv_zm;
  return out;
}

std::vector<PhiBeta> interior_phi_beta(const ChainModel& model, int t, std::span<const KnownPart> z_all) {
  std::vector<PhiBeta> out;
  for (int i = 2; i <= model.length() - 1; ++i) {
    out.push_back(phi_beta(model.block_at(t, i), z_all[i - 1], t, i));
  }
  return out;
}

ChainTransfer chain_transfer(std::span<const PhiBeta> interior, int n_wp, int n_wm) {
  const int n = n_wp + n_wm;
  ChainTransfer tr{Matrix::Identity(n, n), Vector::Zero(n), n_wp, n_wm};
  // Folding left to right gives MT = φ(S_m−1)···φ(2) and
  // MC = Σ_i [φ(S_m−1)···φ(i+1)]·β(i), i.e. repeated application of the link map.
  for (const auto& link : interior) {
    tr.mt = link.phi * tr.mt;
    tr.mc = link.phi * tr.mc + link.beta;
  }
  return tr;
}

ChainTransfer chain_transfer(const ChainModel& model, int t, std::span<const KnownPart> z_all) {
  if (model.length() < 2) throw ValidationError("chain_transfer requires S_m >= 2");
  const auto interior = interior_phi_beta(model, t, z_all);
  const auto& d = model.dims(1);
  return chain_transfer(interior, d.n_wp, d.n_wm);
}

Matrix closure_matrix(const ChainTransfer& tr, const SubsystemBlock& first, const SubsystemBlock& last) {
  const Matrix g12_first = partition_g(first.G, first.dims).g12;
  const Matrix g21_last = partition_g(last.G, last.dims).g21;
  return g21_last * tr.mt11() * g12_first - tr.mt21() * g12_first + g21_last * tr.mt12() - tr.mt22();
}

BoundaryItem solve_boundary(const ChainTransfer& tr, const SubsystemBlock& first, const SubsystemBlock& last,
                            const KnownPart& z_first, const KnownPart& z_last, int t) {
  const int p = tr.n_wp;
  const int m = tr.n_wm;
  const Matrix g12_first = partition_g(first.G, first.dims).g12;
  const Matrix g21_last = partition_g(last.G, last.dims).g21;

  // [w₊(1); v₋(1)] = E·v₋(1) + e with E = [G12(1); I], e = [z₊(1); 0].
  // The closure at S_m reads L·[w₊(S_m−1); v₋(S_m−1)] + z₋(S_m) = 0 with
  // L = [G21(S_m), −I], and [w₊(S_m−1); v₋(S_m−1)] = MT·(E·v₋(1) + e) + MC.
  Vector e = Vector::Zero(p + m);
  e.head(p) = z_first.z_plus;
  Matrix l(m, p + m);
  l << g21_last, -Matrix::Identity(m, m);

  const Matrix k = closure_matrix(tr, first, last);
  const Vector rhs = -(l * (tr.mt * e + tr.mc)) - z_last.z_minus;
  const auto v_minus_1 = linalg::try_solve(k, rhs);
  if (!v_minus_1) throw WellPosednessError("chain not well-posed: closure matrix K singular", t);

  return {g12_first * *v_minus_1 + z_first.z_plus, *v_minus_1};
}

InterconnectSolution propagate_chain(const ChainModel& model, int t, std::span<const KnownPart> z_all,
                                     const BoundaryItem& first, std::span<const PhiBeta> interior) {
  const int sm = model.length();
  const auto& d = model.dims(1);
  const int p = d.n_wp;
  const int m = d.n_wm;

  // s[k] = [w₊(k); v₋(k)] for k = 1..S_m−1.
  std::vector<Vector> s(sm);
  s[1].resize(p + m);
  s[1] << first.w_plus_1, first.v_minus_1;
  for (int k = 2; k <= sm - 1; ++k) {
    const auto& link = interior[k - 2];
    s[k] = link.phi * s[k - 1] + link.beta;
  }

  InterconnectSolution sol{p, m, std::vector<Vector>(sm), std::vector<Vector>(sm)};
  for (int k = 1; k <= sm; ++k) {
    Vector v(p + m);
    const Vector v_plus = k == 1 ? Vector::Zero(p) : Vector(s[k - 1].head(p));
    const Vector v_minus = k == sm ? Vector::Zero(m) : Vector(s[k].tail(m));
    v << v_plus, v_minus;
    sol.w[k - 1] = model.block_at(t, k).G * v + z_all[k - 1].stacked();
    sol.v[k - 1] = std::move(v);
  }
  // Couplings hold exactly: v₊(k) and v₋(k−1) are copies of the neighbor's w
  // only up to rounding in w = G·v + z, so copy them back from w.
  for (int k = 2; k <= sm; ++k) {
    sol.v[k - 1].head(p) = sol.w[k - 2].head(p);
    sol.v[k - 2].tail(m) = sol.w[k - 1].tail(m);
  }
  return sol;
}

InterconnectSolution solve_interconnect(const ChainModel& model, int t, std::span<const Vector> x_all,
                                        std::span<const Vector> u_all) {
  require_sizes(model, x_all, u_all);
  const int sm = model.length();
  if (sm == 1) return {model.dims(1).n_wp, model.dims(1).n_wm, {}, {}};

  const auto z = known_parts(model, t, x_all, u_all);
  const auto interior = interior_phi_beta(model, t, z);
  const auto& d = model.dims(1);
  const auto tr = chain_transfer(interior, d.n_wp, d.n_wm);
  const auto first = solve_boundary(tr, model.block_at(t, 1), model.block_at(t, sm), z.front(), z.back(), t);
  return propagate_chain(model, t, z, first, interior);
}

InterconnectSolution monolithic_solve(const ChainModel& model, int t, std::span<const Vector> x_all,
                                      std::span<const Vector> u_all) {
  require_sizes(model, x_all, u_all);
  const int sm = model.length();
  const auto& d = model.dims(1);
  const int p = d.n_wp;
  const int m = d.n_wm;
  if (sm == 1) return {p, m, {}, {}};

  const auto z = known_parts(model, t, x_all, u_all);
  const int nv = p + m;
  const int n = sm * nv;
  auto plus = [&](int i) { return (i - 1) * nv; };
  auto minus = [&](int i) { return (i - 1) * nv + p; };

  Matrix a = Matrix::Zero(n, n);
  Vector b = Vector::Zero(n);
  int row = 0;
  // v₊(1) = 0, v₋(S_m) = 0
  a.block(row, plus(1), p, p).setIdentity();
  row += p;
  a.block(row, minus(sm), m, m).setIdentity();
  row += m;
  for (int i = 2; i <= sm; ++i) {
    const auto left = partition_g(model.block_at(t, i - 1).G, d);
    const auto right = partition_g(model.block_at(t, i).G, d);
    // v₊(i) = w₊(i−1) = G11(i−1)·v₊(i−1) + G12(i−1)·v₋(i−1) + z₊(i−1)
    a.block(row, plus(i), p, p) += Matrix::Identity(p, p);
    a.block(row, plus(i - 1), p, p) -= left.g11;
    a.block(row, minus(i - 1), p, m) -= left.g12;
    b.segment(row, p) = z[i - 2].z_plus;
    row += p;
    // v₋(i−1) = w₋(i) = G21(i)·v₊(i) + G22(i)·v₋(i) + z₋(i)
    a.block(row, minus(i - 1), m, m) += Matrix::Identity(m, m);
    a.block(row, plus(i), m, p) -= right.g21;
    a.block(row, minus(i), m, m) -= right.g22;
    b.segment(row, m) = z[i - 1].z_minus;
    row += m;
  }

  const auto solved = linalg::try_solve(a, b);
  if (!solved) throw WellPosednessError("interconnection system singular", t);

  InterconnectSolution sol{p, m, std::vector<Vector>(sm), std::vector<Vector>(sm)};
  for (int i = 1; i <= sm; ++i) {
    sol.v[i - 1] = solved->col(0).segment(plus(i), nv);
    sol.w[i - 1] = model.block_at(t, i).G * sol.v[i - 1] + z[i - 1].stacked();
  }
  sol.v[0].head(p).setZero();
  sol.v[sm - 1].tail(m).setZero();
  for (int i = 2; i <= sm; ++i) {
    sol.v[i - 1].head(p) = sol.w[i - 2].head(p);
    sol.v[i - 2].tail(m) = sol.w[i - 1].tail(m);
  }
  return sol;
}

double max_relative_deviation(const InterconnectSolution& a, const InterconnectSolution& b) {
  if (a.v.size() != b.v.size()) throw ShapeError("max_relative_deviation: solutions differ in length");
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < a.v.size(); ++k) {
    diff = std::max({diff, linalg::max_abs(a.v[k] - b.v[k]), linalg::max_abs(a.w[k] - b.w[k])});
    scale = std::max({scale, linalg::max_abs(b.v[k]), linalg::max_abs(b.w[k])});
  }
  if (diff == 0.0) return 0.0;
  return diff / std::max(scale, std::numeric_limits<double>::min());
}

InterconnectResiduals residuals(const ChainModel& model, int t, std::span<const KnownPart> z_all,
                                const InterconnectSolution& sol) {
  InterconnectResiduals r;
  const int sm = sol.length();
  if (sm == 0) return r;
  r.boundary = std::max(linalg::max_abs(sol.v_plus(1)), linalg::max_abs(sol.v_minus(sm)));
  for (int i = 2; i <= sm; ++i) {
    r.coupling = std::max({r.coupling, linalg::max_abs(sol.v_plus(i) - sol.w_plus(i - 1)),
                           linalg::max_abs(sol.v_minus(i - 1) - sol.w_minus(i))});
  }
  for (int i = 1; i <= sm; ++i) {
    const Vector expect = model.block_at(t, i).G * sol.v[i - 1] + z_all[i - 1].stacked();
    r.output = std::max(r.output, linalg::max_abs(sol.w[i - 1] - expect));
  }
  return r;
}

void write_solution_csv_header(std::ostream& out) { out << "t,i,signal_name,component_index,value\n"; }

void write_solution_csv(std::ostream& out, int t, const InterconnectSolution& sol) {
  auto emit = [&](int i, const char* name, const Vector& x) {
    for (Eigen::Index c = 0; c < x.size(); ++c) fmt::print(out, "{},{},{},{},{}\n", t, i, name, c + 1, x(c));
  };
  for (int i = 1; i <= sol.length(); ++i) {
    emit(i, "v_plus", sol.v_plus(i));
    emit(i, "v_minus", sol.v_minus(i));
    emit(i, "w_plus", sol.w_plus(i));
    emit(i, "w_minus", sol.w_minus(i));
  }
}

}  // namespace sis
