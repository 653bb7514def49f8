#include "sis/chain_model.hpp"
#include "sis/interconnect.hpp"
#include "sis/linalg.hpp"

#include <fmt/format.h>

namespace sis {
namespace {

using Kind = Violation::Kind;

std::string where(int t, int i) { return fmt::format("(t={},i={})", t, i); }

bool check_shapes(const SubsystemBlock& b, int t, int i, std::vector<Violation>& out) {
  const auto& d = b.dims;
  struct Expect {
    const char* name;
    const Matrix& m;
    int rows;
    int cols;
  };
  const Expect expected[] = {
      {"A", b.A, d.n_x, d.n_x},   {"B", b.B, d.n_x, d.n_v()},  {"C", b.C, d.n_x, d.n_u},
      {"D", b.D, d.n_v(), d.n_x}, {"G", b.G, d.n_v(), d.n_v()}, {"H", b.H, d.n_v(), d.n_u},
      {"J", b.J, d.n_y, d.n_x},   {"R", b.R, d.n_y, d.n_u},    {"M", b.M, d.n_y, d.n_y},
  };
  bool ok = true;
  for (const auto& e : expected) {
    if (e.m.rows() != e.rows || e.m.cols() != e.cols) {
      out.push_back({Kind::kShapeMismatch, t, i,
                     fmt::format("shape mismatch: {} is {}x{}, expected {}x{} at {}", e.name, e.m.rows(),
                                 e.m.cols(), e.rows, e.cols, where(t, i))});
      ok = false;
    }
  }
  return ok;
}

}  // namespace

ValidationReport validate_chain(const ChainModel& model) {
  ValidationReport report;
  auto& out = report.violations;
  const int sm = model.length();

  bool dims_ok = true;
  for (int i = 1; i <= sm; ++i) {
    const auto& d = model.dims(i);
    if (d.n_x < 1 || d.n_u < 0 || d.n_y < 0 || d.n_wp < 0 || d.n_wm < 0) {
      out.push_back({Kind::kBadDims, 0, i, fmt::format("invalid signal dims at i={}", i)});
      dims_ok = false;
    }
  }
  if (!dims_ok) return report;

  // v₊(i) = w₊(i−1) and v₋(i−1) = w₋(i) force equal coupling sizes on neighbors.
  for (int i = 2; i <= sm; ++i) {
    const auto& left = model.dims(i - 1);
    const auto& right = model.dims(i);
    if (left.n_wp != right.n_wp || left.n_wm != right.n_wm) {
      out.push_back({Kind::kNeighborMismatch, 0, i,
                     fmt::format("neighbor dim mismatch at i={}: (n_wp,n_wm)=({},{}) after ({},{})", i,
                                 right.n_wp, right.n_wm, left.n_wp, left.n_wm)});
    }
  }
  if (sm == 1 && model.dims(1).n_v() != 0) {
    out.push_back({Kind::kDegenerateCoupling, 0, 1, "S_m=1 requires n_wp=n_wm=0 at i=1"});
  }
  const bool topology_ok = out.empty();

  // Time-invariant indices are checked once, at t=1.
  const bool invariant = model.is_time_invariant();
  const int last_t = invariant ? 1 : model.horizon();
  for (int t = 1; t <= last_t; ++t) {
    bool step_ok = true;
    std::vector<SubsystemBlock> blocks;
    blocks.reserve(sm);
    for (int i = 1; i <= sm; ++i) {
      blocks.push_back(model.block_at(t, i));
      const auto& b = blocks.back();
      const bool report_here = t == 1 || !model.is_time_invariant(i);
      std::vector<Violation> local;
      const bool shapes_ok = check_shapes(b, t, i, local);
      if (shapes_ok && !linalg::is_psd(b.M, 1e-12, 1e-10)) {
        local.push_back({Kind::kMNotPsd, t, i, "M not symmetric PSD at " + where(t, i)});
      }
      if (shapes_ok && i > 1 && i < sm && b.dims.n_wm > 0 &&
          !(linalg::rcond(partition_g(b.G, b.dims).g22) > kRcondTolerance)) {
        local.push_back({Kind::kG22Singular, t, i, "G22 singular at " + where(t, i)});
      }
      step_ok = step_ok && local.empty();
      if (report_here) out.insert(out.end(), local.begin(), local.end());
    }
    if (!topology_ok || !step_ok || sm < 2) continue;

    const auto& d = model.dims(1);
    std::vector<KnownPart> zero(sm, KnownPart{Vector::Zero(d.n_wp), Vector::Zero(d.n_wm)});
    const auto transfer = chain_transfer(model, t, zero);
    if (!(linalg::rcond(closure_matrix(transfer, blocks.front(), blocks.back())) > kRcondTolerance)) {
      out.push_back({Kind::kClosureSingular, t, 0, fmt::format("closure matrix K singular at t={}", t)});
    }
  }
  return report;
}

}  // namespace sis
