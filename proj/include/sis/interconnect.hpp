#pragma once

#include "sis/chain_model.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace sis {

/// z = D·x + H·u split into its w₊ and w₋ rows.
struct KnownPart {
  Vector z_plus;
  Vector z_minus;

  Vector stacked() const;
};

/// One link of the chain recursion [w₊(i); v₋(i)] = phi·[w₊(i−1); v₋(i−1)] + beta.
struct PhiBeta {
  Matrix phi;
  Vector beta;
};

/// Ordered product MT = φ(S_m−1)···φ(2) and the matching affine term MC.
struct ChainTransfer {
  Matrix mt;
  Vector mc;
  int n_wp = 0;
  int n_wm = 0;

  Matrix mt11() const { return mt.topLeftCorner(n_wp, n_wp); }
  Matrix mt12() const { return mt.topRightCorner(n_wp, n_wm); }
  Matrix mt21() const { return mt.bottomLeftCorner(n_wm, n_wp); }
  Matrix mt22() const { return mt.bottomRightCorner(n_wm, n_wm); }
};

/// First chain item: w₊(t,1) and v₋(t,1).
struct BoundaryItem {
  Vector w_plus_1;
  Vector v_minus_1;
};

/// All interconnection vectors at one time step, stored 0-based; the accessors
/// take the 1-based spatial index. Empty for S_m = 1.
struct InterconnectSolution {
  int n_wp = 0;
  int n_wm = 0;
  std::vector<Vector> v;  // [v₊(i); v₋(i)]
  std::vector<Vector> w;  // [w₊(i); w₋(i)]

  bool empty() const { return v.empty(); }
  int length() const { return static_cast<int>(v.size()); }
  Vector v_plus(int i) const { return v.at(i - 1).head(n_wp); }
  Vector v_minus(int i) const { return v.at(i - 1).tail(n_wm); }
  Vector w_plus(int i) const { return w.at(i - 1).head(n_wp); }
  Vector w_minus(int i) const { return w.at(i - 1).tail(n_wm); }
};

KnownPart known_part(const SubsystemBlock& block, const Vector& x, const Vector& u);

/// known_part for every index of the chain at time t.
std::vector<KnownPart> known_parts(const ChainModel& model, int t, std::span<const Vector> x_all,
                                   std::span<const Vector> u_all);

/// Throws SingularityError naming (t, i) when G22 is not invertible.
PhiBeta phi_beta(const SubsystemBlock& block, const KnownPart& z, int t = 0, int i = 0);

/// phi_beta for the interior indices 2..S_m−1, element k holds index k+2.
std::vector<PhiBeta> interior_phi_beta(const ChainModel& model, int t, std::span<const KnownPart> z_all);

ChainTransfer chain_transfer(std::span<const PhiBeta> interior, int n_wp, int n_wm);
ChainTransfer chain_transfer(const ChainModel& model, int t, std::span<const KnownPart> z_all);

/// K = G21(S_m)·MT11·G12(1) − MT21·G12(1) + G21(S_m)·MT12 − MT22.
Matrix closure_matrix(const ChainTransfer& transfer, const SubsystemBlock& first, const SubsystemBlock& last);

/// Solves the boundary closure for the first chain item. Throws
/// WellPosednessError when K is singular.
BoundaryItem solve_boundary(const ChainTransfer& transfer, const SubsystemBlock& first,
                            const SubsystemBlock& last, const KnownPart& z_first, const KnownPart& z_last,
                            int t = 0);

/// Runs the chain recursion forward from the first item and assembles v and w.
InterconnectSolution propagate_chain(const ChainModel& model, int t, std::span<const KnownPart> z_all,
                                     const BoundaryItem& first, std::span<const PhiBeta> interior);

/// Chain-recursion solve of every interconnection vector at time t.
InterconnectSolution solve_interconnect(const ChainModel& model, int t, std::span<const Vector> x_all,
                                        std::span<const Vector> u_all);

/// Dense solve of the stacked coupling/boundary system. Used as the reference
/// for solve_interconnect and as ground truth by the simulator.
InterconnectSolution monolithic_solve(const ChainModel& model, int t, std::span<const Vector> x_all,
                                      std::span<const Vector> u_all);

/// ‖a − b‖∞ / ‖b‖∞ over all stacked v and w entries (0 when both are zero).
double max_relative_deviation(const InterconnectSolution& a, const InterconnectSolution& b);

struct InterconnectResiduals {
  double coupling = 0.0;  // max |v₊(i) − w₊(i−1)|, |v₋(i−1) − w₋(i)|
  double boundary = 0.0;  // max |v₊(1)|, |v₋(S_m)|
  double output = 0.0;    // max |w − G·v − z|
};

InterconnectResiduals residuals(const ChainModel& model, int t, std::span<const KnownPart> z_all,
                                const InterconnectSolution& solution);

/// Rows "t,i,signal_name,component_index,value"; no header.
void write_solution_csv(std::ostream& out, int t, const InterconnectSolution& solution);
void write_solution_csv_header(std::ostream& out);

}  // namespace sis
