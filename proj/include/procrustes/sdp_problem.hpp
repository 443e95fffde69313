// Standard-form conic program model: minimize a linear objective over block
// variables (PSD blocks in scaled-vector coordinates, nonnegative vectors,
// free vectors) subject to linear equality rows. Also the presolve pass.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "procrustes/matcore.hpp"

namespace procrustes {

// --- svec coordinates -------------------------------------------------------
//
// A symmetric matrix of order n is stored as the length n(n+1)/2 vector of
// its lower triangle in column-major order, off-diagonal entries scaled by
// sqrt(2). Inner products of symmetric matrices become dot products and the
// PSD cone stays self-dual in these coordinates.

inline constexpr double kSqrt2 = 1.4142135623730951;

inline int svec_dim(int order) { return order * (order + 1) / 2; }

inline int svec_index(int order, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * order - j * (j - 1) / 2 + (i - j);
}

inline Vector svec(const Matrix& s) {
  const int n = static_cast<int>(s.rows());
  Vector v(svec_dim(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    v(k++) = s(j, j);
    for (int i = j + 1; i < n; ++i) v(k++) = kSqrt2 * s(i, j);
  }
  return v;
}

inline Matrix smat(int order, const Vector& v) {
  Matrix s(order, order);
  int k = 0;
  for (int j = 0; j < order; ++j) {
    s(j, j) = v(k++);
    for (int i = j + 1; i < order; ++i) {
      s(i, j) = v(k) / kSqrt2;
      s(j, i) = s(i, j);
      ++k;
    }
  }
  return s;
}

/// Coefficient c at the svec position of (i,j) such that c * svec(M)[pos]
/// equals M(i,j).
inline double svec_entry_coef(int i, int j) { return i == j ? 1.0 : 1.0 / kSqrt2; }

// --- problem model -----------------------------------------------------------

enum class BlockKind { Psd, Nonneg, Free };

struct BlockDesc {
  BlockKind kind = BlockKind::Free;
  int size = 0;  // PSD: matrix order; otherwise vector length

  int dim() const { return kind == BlockKind::Psd ? svec_dim(size) : size; }
};

struct Coef {
  int block = 0;
  int index = 0;
  double value = 0.0;
};

struct LinearRow {
  std::vector<Coef> coefs;
  double rhs = 0.0;
};

class SdpProblem {
 public:
  int add_psd_block(int order) {
    if (order < 1) throw std::invalid_argument("add_psd_block: order must be positive");
    blocks_.push_back({BlockKind::Psd, order});
    objective_.emplace_back(Vector::Zero(svec_dim(order)));
    return static_cast<int>(blocks_.size()) - 1;
  }
  int add_nonneg_block(int len) {
    if (len < 1) throw std::invalid_argument("add_nonneg_block: length must be positive");
    blocks_.push_back({BlockKind::Nonneg, len});
    objective_.emplace_back(Vector::Zero(len));
    return static_cast<int>(blocks_.size()) - 1;
  }
  int add_free_block(int len) {
    if (len < 1) throw std::invalid_argument("add_free_block: length must be positive");
    blocks_.push_back({BlockKind::Free, len});
    objective_.emplace_back(Vector::Zero(len));
    return static_cast<int>(blocks_.size()) - 1;
  }

  void add_objective(int block, int index, double value) {
    check_coord(block, index, "add_objective");
    objective_[block](index) += value;
  }
  /// Sets a PSD block's objective to <W, .> for a symmetric weight W.
  void set_objective_matrix(int block, const Matrix& w) {
    check_block(block, "set_objective_matrix");
    if (blocks_[block].kind != BlockKind::Psd)
      throw std::invalid_argument("set_objective_matrix: block is not PSD");
    if (w.rows() != blocks_[block].size || w.cols() != blocks_[block].size)
      throw std::invalid_argument("set_objective_matrix: weight order mismatch");
    objective_[block] = svec((w + w.transpose()) / 2.0);
  }
  void clear_objective() {
    for (auto& o : objective_) o.setZero();
  }

  /// Appends an equality row; duplicate coordinates are merged and exact
  /// zeros dropped. Returns the row index.
  int add_row(LinearRow row) {
    std::map<std::pair<int, int>, double> merged;
    for (const Coef& c : row.coefs) {
      check_coord(c.block, c.index, "add_row");
      merged[{c.block, c.index}] += c.value;
    }
    LinearRow clean;
    clean.rhs = row.rhs;
    for (const auto& [key, v] : merged)
      if (v != 0.0) clean.coefs.push_back({key.first, key.second, v});
    rows_.push_back(std::move(clean));
    return static_cast<int>(rows_.size()) - 1;
  }

  /// Pins entry (i,j) of a PSD block to a constant.
  int pin_psd_entry(int block, int i, int j, double value) {
    check_block(block, "pin_psd_entry");
    const int n = blocks_[block].size;
    if (blocks_[block].kind != BlockKind::Psd || i < 0 || j < 0 || i >= n || j >= n)
      throw std::invalid_argument("pin_psd_entry: bad block or indices");
    LinearRow row;
    row.coefs.push_back({block, svec_index(n, i, j), svec_entry_coef(i, j)});
    row.rhs = value;
    return add_row(std::move(row));
  }

  const std::vector<BlockDesc>& blocks() const { return blocks_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const Vector& objective(int block) const { return objective_[block]; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int total_dim() const {
    int d = 0;
    for (const auto& b : blocks_) d += b.dim();
    return d;
  }

  double row_value(int r, const std::vector<Vector>& x) const {
    double v = 0.0;
    for (const Coef& c : rows_[r].coefs) v += c.value * x[c.block](c.index);
    return v;
  }
  double objective_value(const std::vector<Vector>& x) const {
    double v = 0.0;
    for (int b = 0; b < num_blocks(); ++b) v += objective_[b].dot(x[b]);
    return v;
  }

 private:
  void check_block(int block, const char* who) const {
    if (block < 0 || block >= num_blocks())
      throw std::invalid_argument(std::string(who) + ": block index out of range");
  }
  void check_coord(int block, int index, const char* who) const {
    check_block(block, who);
    if (index < 0 || index >= blocks_[block].dim())
      throw std::invalid_argument(std::string(who) + ": coordinate index out of range");
  }

  std::vector<BlockDesc> blocks_;
  std::vector<Vector> objective_;
  std::vector<LinearRow> rows_;
};

// --- presolve ----------------------------------------------------------------

enum class PresolveActionKind {
  DropZeroRow,
  DropDuplicateRow,
  DropDependentRow,
  FixVariable,
  ContradictionRow,
};

struct PresolveAction {
  PresolveActionKind kind;
  int row = -1;
  int block = -1;
  int index = -1;
  double value = 0.0;
  std::string note;
};

/// Reduced problem plus everything needed to map a reduced solution back to
/// the original coordinates.
struct PresolveOutcome {
  SdpProblem problem;
  std::vector<PresolveAction> actions;
  bool infeasible = false;
  std::string infeasible_reason;

  double objective_offset = 0.0;           // contribution of fixed variables
  std::vector<int> kept_rows;              // reduced row -> original row
  int original_rows = 0;
  std::vector<std::vector<int>> var_map;   // per block: original index -> reduced (-1 fixed)
  std::vector<std::vector<double>> fixed;  // per block: fixed values where var_map == -1
  std::vector<BlockDesc> original_blocks;
};

namespace detail {

struct WorkRow {
  std::map<std::pair<int, int>, double> coefs;  // (block, index) -> value
  double rhs = 0.0;
  bool alive = true;
};

inline double row_scale(const WorkRow& r) {
  double s = 0.0;
  for (const auto& [k, v] : r.coefs) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace detail

/// Removes contradictions, zero rows, duplicates and (optionally) linearly
/// dependent rows, and fixes free/nonnegative variables forced by singleton
/// rows. Every transformation is recorded for solution back-mapping.
inline PresolveOutcome presolve(const SdpProblem& p, bool eliminate_dependent = true) {
  constexpr double kZeroRhs = 1e-10;
  constexpr double kCoefDrop = 1e-14;

  PresolveOutcome out;
  out.original_rows = p.num_rows();
  out.original_blocks = p.blocks();
  out.var_map.resize(p.num_blocks());
  out.fixed.resize(p.num_blocks());
  for (int b = 0; b < p.num_blocks(); ++b) {
    out.var_map[b].assign(p.blocks()[b].dim(), 0);
    out.fixed[b].assign(p.blocks()[b].dim(), 0.0);
  }

  std::vector<detail::WorkRow> work(p.num_rows());
  for (int r = 0; r < p.num_rows(); ++r) {
    const LinearRow& row = p.rows()[r];
    double scale = 0.0;
    for (const Coef& c : row.coefs) scale = std::max(scale, std::abs(c.value));
    for (const Coef& c : row.coefs)
      if (std::abs(c.value) > kCoefDrop * std::max(1.0, scale))
        work[r].coefs[{c.block, c.index}] = c.value;
    work[r].rhs = row.rhs;
  }

  std::vector<std::vector<char>> is_fixed(p.num_blocks());
  for (int b = 0; b < p.num_blocks(); ++b) is_fixed[b].assign(p.blocks()[b].dim(), 0);

  auto declare_infeasible = [&](int r, const std::string& why) {
    out.infeasible = true;
    out.infeasible_reason = why;
    out.actions.push_back({PresolveActionKind::ContradictionRow, r, -1, -1, 0.0, why});
  };

  // Zero rows and singleton fixing to a fixpoint. Fixing only applies to
  // free and nonnegative coordinates; PSD entries stay pinned by their rows.
  bool changed = true;
  while (changed && !out.infeasible) {
    changed = false;
    for (int r = 0; r < p.num_rows() && !out.infeasible; ++r) {
      detail::WorkRow& row = work[r];
      if (!row.alive) continue;
      if (row.coefs.empty()) {
        if (std::abs(row.rhs) <= kZeroRhs) {
          row.alive = false;
          out.actions.push_back({PresolveActionKind::DropZeroRow, r, -1, -1, 0.0, "0 = 0 row"});
        } else {
          declare_infeasible(r, "row reduces to 0 = " + std::to_string(row.rhs));
        }
        changed = true;
        continue;
      }
      if (row.coefs.size() == 1) {
        const auto [key, coef] = *row.coefs.begin();
        const auto [block, index] = key;
        const BlockKind kind = p.blocks()[block].kind;
        if (kind == BlockKind::Psd) continue;
        double value = row.rhs / coef;
        if (kind == BlockKind::Nonneg) {
          if (value < -1e-9 * std::max(1.0, std::abs(row.rhs))) {
            declare_infeasible(r, "nonnegative variable forced to " + std::to_string(value));
            continue;
          }
          value = std::max(value, 0.0);
        }
        is_fixed[block][index] = 1;
        out.fixed[block][index] = value;
        row.alive = false;
        out.actions.push_back({PresolveActionKind::FixVariable, r, block, index, value,
                               "singleton row fixes variable"});
        for (auto& other : work) {
          if (!other.alive) continue;
          auto it = other.coefs.find(key);
          if (it != other.coefs.end()) {
            other.rhs -= it->second * value;
            other.coefs.erase(it);
          }
        }
        changed = true;
      }
    }
  }

  // Duplicate rows (equal up to positive or negative scaling).
  if (!out.infeasible) {
    std::vector<int> alive_idx;
    for (int r = 0; r < p.num_rows(); ++r)
      if (work[r].alive) alive_idx.push_back(r);
    for (size_t a = 0; a < alive_idx.size() && !out.infeasible; ++a) {
      const int ra = alive_idx[a];
      if (!work[ra].alive) continue;
      const double sa = detail::row_scale(work[ra]);
      for (size_t b = a + 1; b < alive_idx.size() && !out.infeasible; ++b) {
        const int rb = alive_idx[b];
        if (!work[rb].alive) continue;
        const detail::WorkRow& x = work[ra];
        const detail::WorkRow& y = work[rb];
        if (x.coefs.size() != y.coefs.size()) continue;
        // candidate ratio from the first shared coordinate
        auto itx = x.coefs.begin();
        auto ity = y.coefs.find(itx->first);
        if (ity == y.coefs.end()) continue;
        const double ratio = ity->second / itx->second;
        bool same = true;
        for (const auto& [k, v] : x.coefs) {
          auto it = y.coefs.find(k);
          if (it == y.coefs.end() || std::abs(it->second - ratio * v) > 1e-12 * std::max(1.0, sa * std::abs(ratio))) {
            same = false;
            break;
          }
        }
        if (!same) continue;
        if (std::abs(y.rhs - ratio * x.rhs) > kZeroRhs * std::max(1.0, std::abs(ratio) * std::abs(x.rhs))) {
          declare_infeasible(rb, "duplicate of row " + std::to_string(ra) + " with conflicting rhs");
        } else {
          work[rb].alive = false;
          out.actions.push_back({PresolveActionKind::DropDuplicateRow, rb, -1, -1, ratio,
                                 "duplicate of row " + std::to_string(ra)});
        }
      }
    }
  }

  // Index maps for the reduced problem.
  std::vector<int> block_map(p.num_blocks(), -1);
  SdpProblem reduced;
  if (!out.infeasible) {
    for (int b = 0; b < p.num_blocks(); ++b) {
      const BlockDesc& desc = p.blocks()[b];
      if (desc.kind == BlockKind::Psd) {
        block_map[b] = reduced.add_psd_block(desc.size);
        for (int i = 0; i < desc.dim(); ++i) out.var_map[b][i] = i;
        continue;
      }
      int kept = 0;
      for (int i = 0; i < desc.dim(); ++i) {
        if (is_fixed[b][i]) {
          out.var_map[b][i] = -1;
          out.objective_offset += p.objective(b)(i) * out.fixed[b][i];
        } else {
          out.var_map[b][i] = kept++;
        }
      }
      if (kept > 0)
        block_map[b] = desc.kind == BlockKind::Nonneg ? reduced.add_nonneg_block(kept)
                                                      : reduced.add_free_block(kept);
    }
    for (int b = 0; b < p.num_blocks(); ++b) {
      if (block_map[b] < 0) continue;
      for (int i = 0; i < p.blocks()[b].dim(); ++i)
        if (out.var_map[b][i] >= 0 && p.objective(b)(i) != 0.0)
          reduced.add_objective(block_map[b], out.var_map[b][i], p.objective(b)(i));
    }
    for (int r = 0; r < p.num_rows(); ++r) {
      if (!work[r].alive) continue;
      LinearRow row;
      row.rhs = work[r].rhs;
      for (const auto& [k, v] : work[r].coefs)
        row.coefs.push_back({block_map[k.first], out.var_map[k.first][k.second], v});
      reduced.add_row(std::move(row));
      out.kept_rows.push_back(r);
    }
  }

  // Dependent-row elimination via rank-revealing QR of A^T. Dropped rows are
  // checked for consistency against the retained ones.
  if (!out.infeasible && eliminate_dependent && reduced.num_rows() > 0) {
    const int m = reduced.num_rows();
    const int n = reduced.total_dim();
    std::vector<int> offs(reduced.num_blocks() + 1, 0);
    for (int b = 0; b < reduced.num_blocks(); ++b) offs[b + 1] = offs[b] + reduced.blocks()[b].dim();
    Matrix at = Matrix::Zero(n, m);
    Vector rhs(m);
    for (int r = 0; r < m; ++r) {
      for (const Coef& c : reduced.rows()[r].coefs) at(offs[c.block] + c.index, r) = c.value;
      rhs(r) = reduced.rows()[r].rhs;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(at);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    if (rank < m) {
      std::vector<char> keep(m, 0);
      for (int k = 0; k < rank; ++k) keep[qr.colsPermutation().indices()(k)] = 1;
      Matrix akept(n, rank);
      Vector bkept(rank);
      std::vector<int> kept_local;
      for (int r = 0; r < m; ++r)
        if (keep[r]) {
          akept.col(static_cast<int>(kept_local.size())) = at.col(r);
          bkept(static_cast<int>(kept_local.size())) = rhs(r);
          kept_local.push_back(r);
        }
      Eigen::ColPivHouseholderQR<Matrix> qr_kept(akept);
      for (int r = 0; r < m && !out.infeasible; ++r) {
        if (keep[r]) continue;
        const Vector combo = qr_kept.solve(at.col(r));
        const double implied = bkept.dot(combo);
        if (std::abs(implied - rhs(r)) > 1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
          declare_infeasible(out.kept_rows[r], "dependent row with inconsistent rhs");
        } else {
          out.actions.push_back({PresolveActionKind::DropDependentRow, out.kept_rows[r], -1, -1,
                                 0.0, "linearly dependent row"});
        }
      }
      if (!out.infeasible) {
        SdpProblem slim;
        for (int b = 0; b < reduced.num_blocks(); ++b) {
          const BlockDesc& d = reduced.blocks()[b];
          if (d.kind == BlockKind::Psd)
            slim.add_psd_block(d.size);
          else if (d.kind == BlockKind::Nonneg)
            slim.add_nonneg_block(d.size);
          else
            slim.add_free_block(d.size);
          for (int i = 0; i < d.dim(); ++i)
            if (reduced.objective(b)(i) != 0.0) slim.add_objective(b, i, reduced.objective(b)(i));
        }
        std::vector<int> new_kept;
        for (int r = 0; r < m; ++r)
          if (keep[r]) {
            slim.add_row(reduced.rows()[r]);
            new_kept.push_back(out.kept_rows[r]);
          }
        reduced = std::move(slim);
        out.kept_rows = std::move(new_kept);
      }
    }
  }

  out.problem = std::move(reduced);
  return out;
}

}  // namespace procrustes
