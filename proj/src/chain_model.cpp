#include "sis/chain_model.hpp"

#include <string>

namespace sis {

SubsystemBlock SubsystemBlock::zeros(const SignalDims& d) {
  SubsystemBlock b;
  b.dims = d;
  b.A = Matrix::Zero(d.n_x, d.n_x);
  b.B = Matrix::Zero(d.n_x, d.n_v());
  b.C = Matrix::Zero(d.n_x, d.n_u);
  b.D = Matrix::Zero(d.n_v(), d.n_x);
  b.G = Matrix::Zero(d.n_v(), d.n_v());
  b.H = Matrix::Zero(d.n_v(), d.n_u);
  b.J = Matrix::Zero(d.n_y, d.n_x);
  b.R = Matrix::Zero(d.n_y, d.n_u);
  b.M = Matrix::Zero(d.n_y, d.n_y);
  return b;
}

GPartition partition_g(const Matrix& g, const SignalDims& dims) {
  const int p = dims.n_wp;
  const int m = dims.n_wm;
  if (p < 0 || m < 0 || g.rows() != p + m || g.cols() != p + m) {
    throw ShapeError("partition_g: G is " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                     ", expected " + std::to_string(p + m) + "x" + std::to_string(p + m));
  }
  return {g.topLeftCorner(p, p), g.topRightCorner(p, m), g.bottomLeftCorner(m, p),
          g.bottomRightCorner(m, m)};
}

ChainModel::ChainModel(int horizon, std::vector<SignalDims> dims, std::vector<BlockSource> sources)
    : horizon_(horizon), dims_(std::move(dims)), sources_(std::move(sources)) {
  if (horizon_ < 1) throw ValidationError("ChainModel: horizon must be >= 1");
  if (dims_.empty()) throw ValidationError("ChainModel: S_m must be >= 1");
  if (sources_.size() != dims_.size()) {
    throw ValidationError("ChainModel: " + std::to_string(sources_.size()) + " block sources for S_m=" +
                          std::to_string(dims_.size()));
  }
  for (const auto& s : sources_) {
    if (const auto* rule = std::get_if<BlockRule>(&s); rule && !*rule) {
      throw ValidationError("ChainModel: empty block rule");
    }
  }
}

ChainModel ChainModel::uniform(int length, int horizon, const SubsystemBlock& block) {
  if (length < 1) throw ValidationError("ChainModel: S_m must be >= 1");
  return ChainModel(horizon, std::vector<SignalDims>(length, block.dims),
                    std::vector<BlockSource>(length, TimeTable{block, {}}));
}

void ChainModel::check_index(int t, int i) const {
  if (t < 1 || t > horizon_ || i < 1 || i > length()) {
    throw RangeError("index (t=" + std::to_string(t) + ",i=" + std::to_string(i) + ") outside t in [1," +
                     std::to_string(horizon_) + "], i in [1," + std::to_string(length()) + "]");
  }
}

const SignalDims& ChainModel::dims(int i) const {
  if (i < 1 || i > length()) throw RangeError("spatial index i=" + std::to_string(i) + " out of range");
  return dims_[i - 1];
}

const BlockSource& ChainModel::source(int i) const {
  if (i < 1 || i > length()) throw RangeError("spatial index i=" + std::to_string(i) + " out of range");
  return sources_[i - 1];
}

SubsystemBlock ChainModel::block_at(int t, int i) const {
  check_index(t, i);
  const auto& src = sources_[i - 1];
  SubsystemBlock b;
  if (const auto* table = std::get_if<TimeTable>(&src)) {
    const auto it = table->overrides.find(t);
    b = it == table->overrides.end() ? table->base : it->second;
  } else {
    b = std::get<BlockRule>(src)(t);
  }
  b.dims = dims_[i - 1];
  return b;
}

bool ChainModel::is_time_invariant(int i) const {
  const auto* table = std::get_if<TimeTable>(&source(i));
  return table && table->overrides.empty();
}

bool ChainModel::is_time_invariant() const {
  for (int i = 1; i <= length(); ++i) {
    if (!is_time_invariant(i)) return false;
  }
  return true;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "OK\n";
  std::string out;
  for (const auto& v : violations) out += v.message + "\n";
  return out;
}

}  // namespace sis
