// Primal-dual path-following solver for the standard-form conic programs of
// sdp_problem.hpp, built on a homogeneous self-dual embedding so that primal
// and dual infeasibility come out as certificates rather than convergence
// failures. Nesterov-Todd scaling, Mehrotra predictor-corrector, dense
// factorization of the (statically regularized) augmented Schur system.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <cstdio>
#include <string>
#include <vector>

#include "procrustes/sdp_problem.hpp"

namespace procrustes {

struct SolverSettings {
  double tol = 1e-8;              // relative feasibility/gap tolerance
  int max_iters = 200;
  double step_fraction = 0.98;    // fraction of the distance to the cone boundary
  double infeas_tol = 1e-8;       // certificate acceptance threshold
  bool presolve = true;
  bool eliminate_dependent_rows = false;  // full QR pass; the public presolve() op always does this
  double static_reg = 1e-11;
  int refine_steps = 2;
  bool verbose = false;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, Indeterminate };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::Indeterminate: return "indeterminate";
  }
  return "?";
}

struct SdpSolution {
  SolveStatus status = SolveStatus::Indeterminate;
  std::vector<Vector> x;  // per block (svec coordinates for PSD blocks)
  Vector y;               // one multiplier per original row
  std::vector<Vector> s;  // dual slack per block
  double objective = std::numeric_limits<double>::quiet_NaN();
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::quiet_NaN();
  double dual_residual = std::numeric_limits<double>::quiet_NaN();
  double gap_residual = std::numeric_limits<double>::quiet_NaN();
  // For infeasible statuses: margin of the normalized improving ray
  // (b'y = 1 resp. c'x = -1) over its feasibility defect.
  double certificate_violation = 0.0;
  int iterations = 0;
  std::string message;

  Matrix psd_matrix(const SdpProblem& p, int block) const {
    return smat(p.blocks()[block].size, x[block]);
  }
};

namespace detail {

using MatrixLd = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorLd = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline double sq(double v) { return v * v; }

inline VectorLd svec_ld(const MatrixLd& s) {
  const int n = static_cast<int>(s.rows());
  VectorLd v(svec_dim(n));
  int k = 0;
  const long double r2 = 1.41421356237309504880168872420969808L;
  for (int j = 0; j < n; ++j) {
    v(k++) = s(j, j);
    for (int i = j + 1; i < n; ++i) v(k++) = r2 * s(i, j);
  }
  return v;
}

inline MatrixLd smat_ld(int order, const VectorLd& v) {
  MatrixLd s(order, order);
  const long double r2 = 1.41421356237309504880168872420969808L;
  int k = 0;
  for (int j = 0; j < order; ++j) {
    s(j, j) = v(k++);
    for (int i = j + 1; i < order; ++i) {
      s(i, j) = v(k) / r2;
      s(j, i) = s(i, j);
      ++k;
    }
  }
  return s;
}

struct ConicBlock {
  int problem_block;
  BlockKind kind;
  int size;
  int offset;  // into the concatenated conic vector
  int dim;
};

struct FreeBlock {
  int problem_block;
  int size;
  int offset;
};

struct SolverRowPart {
  int cblock;  // index into conic block list
  std::vector<std::pair<int, double>> entries;  // local coordinate, value
};

struct SolverRow {
  std::vector<SolverRowPart> conic;
  std::vector<std::pair<int, double>> free_entries;  // global free coordinate, value
};

struct PsdScaling {
  Matrix r, rinv, t;  // lambda = rinv X rinv^T = r^T S r; t = r r^T
  Vector lambda;
  // extended-precision copies for the reconstruction path, where double
  // arithmetic hits a noise floor of ||R^{-1}||^2 * eps near convergence
  MatrixLd r_ld, rinv_ld, t_ld;
  VectorLd lambda_ld;
  Eigen::LLT<Matrix> llt_x, llt_s;
};

class HsdSolver {
 public:
  HsdSolver(const SdpProblem& p, const SolverSettings& st) : p_(p), st_(st) { setup(); }

  SdpSolution run() {
    SdpSolution out;
    if (m_ == 0) return solve_unconstrained();
    if (nc_ == 0) return solve_linear();

    initialize();
    double prev_mu = std::numeric_limits<double>::infinity();
    int tiny_steps = 0;
    for (int iter = 0; iter < st_.max_iters; ++iter) {
      if (std::optional<SdpSolution> done = check_termination(iter)) return *done;
      if (!compute_scaling()) return finalize(iter, "cone scaling failed (iterate left the cone)");
      form_augmented();
      if (!factorize()) return finalize(iter, "augmented system factorization failed");

      // residuals as violations of the homogeneous model
      const Vector rp = apply_a(xc_, xf_) - b_ * tau_;
      const Vector atyc = apply_at_conic(y_);
      const Vector atyf = apply_at_free(y_);
      const Vector rdc = -atyc + cc_ * tau_ - sc_;
      const Vector rdf = -atyf + cf_ * tau_;
      const double rg = b_.dot(y_) - cc_.dot(xc_) - cf_.dot(xf_) - kappa_;
      const double mu = (xc_.dot(sc_) + tau_ * kappa_) / (nu_ + 1.0);

      Step aff;
      Vector ds_aff = affine_ds();
      if (!direction(1.0, rp, rdc, rdf, rg, ds_aff, -tau_ * kappa_, aff))
        return finalize(iter, "affine direction solve failed");
      const double alpha_aff = std::min(1.0, step_to_boundary(aff));
      const double mu_aff = ((xc_ + alpha_aff * aff.dxc).dot(sc_ + alpha_aff * aff.dsc) +
                             (tau_ + alpha_aff * aff.dtau) * (kappa_ + alpha_aff * aff.dkappa)) /
                            (nu_ + 1.0);
      double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
      // keep a little centering once the iterate is close to optimality;
      // well-centered endgame iterates keep the scaling system factorable
      const double sigma_floor = mu < 1e-4 ? 0.01 : 0.0;
      sigma = std::min(1.0, std::max(sigma_floor, sigma));

      Step dir;
      Vector ds = combined_ds(sigma * mu, aff);
      const double dk = sigma * mu - tau_ * kappa_ - aff.dtau * aff.dkappa;
      if (!direction(1.0 - sigma, rp, rdc, rdf, rg, ds, dk, dir))
        return finalize(iter, "corrector direction solve failed");

      double alpha = std::min(1.0, st_.step_fraction * step_to_boundary(dir));
      if (st_.verbose) {
        const Vector e1 = apply_a(dir.dxc, dir.dxf) - b_ * dir.dtau + (1.0 - sigma) * rp;
        const Vector e2c = -apply_at_conic(dir.dy) + cc_ * dir.dtau - dir.dsc + (1.0 - sigma) * rdc;
        const Vector e2f = -apply_at_free(dir.dy) + cf_ * dir.dtau + (1.0 - sigma) * rdf;
        const double e3 = b_.dot(dir.dy) - cc_.dot(dir.dxc) - cf_.dot(dir.dxf) - dir.dkappa +
                          (1.0 - sigma) * rg;
        std::fprintf(stderr,
                     "it %3d mu %9.2e tau %8.2e kap %8.2e sig %5.3f a %6.4f lu %d | newton %8.1e %8.1e %8.1e %8.1e\n",
                     iter, mu, tau_, kappa_, sigma, alpha, 0,
                     e1.lpNorm<Eigen::Infinity>(), e2c.lpNorm<Eigen::Infinity>(),
                     nf_ ? e2f.lpNorm<Eigen::Infinity>() : 0.0, std::abs(e3));
      }
      if (!(alpha > 0) || !std::isfinite(alpha)) return finalize(iter, "no positive step");
      xc_ += alpha * dir.dxc;
      xf_ += alpha * dir.dxf;
      y_ += alpha * dir.dy;
      sc_ += alpha * dir.dsc;
      tau_ += alpha * dir.dtau;
      kappa_ += alpha * dir.dkappa;
      iters_ = iter + 1;

      tiny_steps = alpha < 1e-7 ? tiny_steps + 1 : 0;
      if (tiny_steps >= 3) return finalize(iters_, "step length collapsed");
      if (mu < 1e-16 && mu >= prev_mu) return finalize(iters_, "stalled at machine precision");
      prev_mu = mu;
    }
    if (std::optional<SdpSolution> done = check_termination(st_.max_iters)) return *done;
    return finalize(st_.max_iters, "iteration limit reached without resolution");
  }

 private:
  struct Step {
    Vector dxc, dxf, dy, dsc;
    double dtau = 0.0, dkappa = 0.0;
  };

  void setup() {
    m_ = p_.num_rows();
    nc_ = nf_ = 0;
    nu_ = 0.0;
    block_to_conic_.assign(p_.num_blocks(), -1);
    block_to_free_.assign(p_.num_blocks(), -1);
    for (int bidx = 0; bidx < p_.num_blocks(); ++bidx) {
      const BlockDesc& d = p_.blocks()[bidx];
      if (d.kind == BlockKind::Free) {
        block_to_free_[bidx] = static_cast<int>(fblocks_.size());
        fblocks_.push_back({bidx, d.size, nf_});
        nf_ += d.size;
      } else {
        block_to_conic_[bidx] = static_cast<int>(cblocks_.size());
        cblocks_.push_back({bidx, d.kind, d.size, nc_, d.dim()});
        nc_ += d.dim();
        nu_ += d.size;
      }
    }
    cc_ = Vector::Zero(nc_);
    cf_ = Vector::Zero(nf_);
    for (int bidx = 0; bidx < p_.num_blocks(); ++bidx) {
      if (block_to_conic_[bidx] >= 0)
        cc_.segment(cblocks_[block_to_conic_[bidx]].offset, p_.blocks()[bidx].dim()) =
            p_.objective(bidx);
      else
        cf_.segment(fblocks_[block_to_free_[bidx]].offset, p_.blocks()[bidx].size) =
            p_.objective(bidx);
    }
    b_.resize(m_);
    rows_.resize(m_);
    af_ = Matrix::Zero(m_, nf_);
    for (int r = 0; r < m_; ++r) {
      b_(r) = p_.rows()[r].rhs;
      std::map<int, std::vector<std::pair<int, double>>> by_cblock;
      for (const Coef& c : p_.rows()[r].coefs) {
        if (block_to_conic_[c.block] >= 0) {
          by_cblock[block_to_conic_[c.block]].push_back({c.index, c.value});
        } else {
          const int g = fblocks_[block_to_free_[c.block]].offset + c.index;
          rows_[r].free_entries.push_back({g, c.value});
          af_(r, g) = c.value;
        }
      }
      for (auto& [cb, entries] : by_cblock) rows_[r].conic.push_back({cb, std::move(entries)});
    }
    data_scale_ = std::max(1.0, std::max(b_.lpNorm<Eigen::Infinity>(),
                                         std::max(nc_ ? cc_.lpNorm<Eigen::Infinity>() : 0.0,
                                                  nf_ ? cf_.lpNorm<Eigen::Infinity>() : 0.0)));
    for (const auto& row : p_.rows())
      for (const Coef& c : row.coefs) data_scale_ = std::max(data_scale_, std::abs(c.value));
  }

  void initialize() {
    xc_ = Vector::Zero(nc_);
    sc_ = Vector::Zero(nc_);
    for (const ConicBlock& cb : cblocks_) {
      if (cb.kind == BlockKind::Psd) {
        const Vector id = svec(Matrix::Identity(cb.size, cb.size));
        xc_.segment(cb.offset, cb.dim) = id;
        sc_.segment(cb.offset, cb.dim) = id;
      } else {
        xc_.segment(cb.offset, cb.dim).setOnes();
        sc_.segment(cb.offset, cb.dim).setOnes();
      }
    }
    xf_ = Vector::Zero(nf_);
    y_ = Vector::Zero(m_);
    tau_ = 1.0;
    kappa_ = 1.0;
    iters_ = 0;
  }

  // -- matrix-vector plumbing --------------------------------------------

  Vector apply_a(const Vector& xc, const Vector& xf) const {
    Vector out(m_);
    for (int r = 0; r < m_; ++r) {
      double v = 0.0;
      for (const SolverRowPart& part : rows_[r].conic) {
        const int off = cblocks_[part.cblock].offset;
        for (const auto& [idx, val] : part.entries) v += val * xc(off + idx);
      }
      for (const auto& [g, val] : rows_[r].free_entries) v += val * xf(g);
      out(r) = v;
    }
    return out;
  }
  Vector apply_a_conic(const Vector& xc) const {
    Vector out(m_);
    for (int r = 0; r < m_; ++r) {
      double v = 0.0;
      for (const SolverRowPart& part : rows_[r].conic) {
        const int off = cblocks_[part.cblock].offset;
        for (const auto& [idx, val] : part.entries) v += val * xc(off + idx);
      }
      out(r) = v;
    }
    return out;
  }
  Vector apply_at_conic(const Vector& y) const {
    Vector out = Vector::Zero(nc_);
    for (int r = 0; r < m_; ++r) {
      const double yr = y(r);
      if (yr == 0.0) continue;
      for (const SolverRowPart& part : rows_[r].conic) {
        const int off = cblocks_[part.cblock].offset;
        for (const auto& [idx, val] : part.entries) out(off + idx) += val * yr;
      }
    }
    return out;
  }
  Vector apply_at_free(const Vector& y) const { return af_.transpose() * y; }

  // -- Nesterov-Todd scaling ----------------------------------------------

  bool compute_scaling() {
    psd_.assign(cblocks_.size(), PsdScaling{});
    w_ = Vector::Zero(nc_);
    lam_ = Vector::Zero(nc_);
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      const ConicBlock& cb = cblocks_[k];
      if (cb.kind == BlockKind::Nonneg) {
        const auto xs = xc_.segment(cb.offset, cb.dim);
        const auto ss = sc_.segment(cb.offset, cb.dim);
        if ((xs.array() <= 0).any() || (ss.array() <= 0).any()) return false;
        w_.segment(cb.offset, cb.dim) = (xs.array() / ss.array()).sqrt();
        lam_.segment(cb.offset, cb.dim) = (xs.array() * ss.array()).sqrt();
        continue;
      }
      PsdScaling& sc = psd_[k];
      const Matrix x = smat(cb.size, xc_.segment(cb.offset, cb.dim));
      const Matrix s = smat(cb.size, sc_.segment(cb.offset, cb.dim));
      sc.llt_x.compute(x);
      sc.llt_s.compute(s);
      if (sc.llt_x.info() != Eigen::Success || sc.llt_s.info() != Eigen::Success) return false;
      const Matrix lx = sc.llt_x.matrixL();
      const Matrix ls = sc.llt_s.matrixL();
      Eigen::JacobiSVD<Matrix> svd(ls.transpose() * lx,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
      sc.lambda = svd.singularValues();
      if (sc.lambda.minCoeff() <= 0) return false;
      const Vector isqrt = sc.lambda.array().sqrt().inverse();
      sc.r = lx * svd.matrixV() * isqrt.asDiagonal();
      sc.rinv = isqrt.asDiagonal() * svd.matrixU().transpose() * ls.transpose();
      sc.t = sc.r * sc.r.transpose();
      sc.r_ld = sc.r.cast<long double>();
      sc.rinv_ld = sc.rinv.cast<long double>();
      sc.t_ld = sc.r_ld * sc.r_ld.transpose();
      sc.lambda_ld = sc.lambda.cast<long double>();
    }
    return true;
  }

  /// H^{-1} = W^T W applied to a dense conic vector: M -> T M T per PSD
  /// block, elementwise w^2 on nonnegative blocks.
  Vector hinv_apply(const Vector& v) const {
    Vector out(nc_);
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      const ConicBlock& cb = cblocks_[k];
      if (cb.kind == BlockKind::Nonneg) {
        out.segment(cb.offset, cb.dim) =
            v.segment(cb.offset, cb.dim).array() * w_.segment(cb.offset, cb.dim).array().square();
      } else {
        const MatrixLd mv =
            smat_ld(cb.size, v.segment(cb.offset, cb.dim).cast<long double>());
        out.segment(cb.offset, cb.dim) =
            svec_ld(MatrixLd(psd_[k].t_ld * mv * psd_[k].t_ld)).cast<double>();
      }
    }
    return out;
  }

  /// W^{-1} L_lambda^{-1} applied to a scaled-frame target d (svec per PSD
  /// block, plain entries on nonnegative blocks).
  Vector winv_linv(const Vector& d) const {
    Vector out(nc_);
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      const ConicBlock& cb = cblocks_[k];
      if (cb.kind == BlockKind::Nonneg) {
        const auto lam = lam_.segment(cb.offset, cb.dim).array();
        const auto w = w_.segment(cb.offset, cb.dim).array();
        out.segment(cb.offset, cb.dim) = d.segment(cb.offset, cb.dim).array() / lam / w;
      } else {
        const PsdScaling& sc = psd_[k];
        MatrixLd dm = smat_ld(cb.size, d.segment(cb.offset, cb.dim).cast<long double>());
        for (int i = 0; i < cb.size; ++i)
          for (int j = 0; j < cb.size; ++j)
            dm(i, j) = 2.0L * dm(i, j) / (sc.lambda_ld(i) + sc.lambda_ld(j));
        out.segment(cb.offset, cb.dim) =
            svec_ld(MatrixLd(sc.rinv_ld.transpose() * dm * sc.rinv_ld)).cast<double>();
      }
    }
    return out;
  }

  Vector affine_ds() const {
    Vector d(nc_);
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      const ConicBlock& cb = cblocks_[k];
      if (cb.kind == BlockKind::Nonneg) {
        d.segment(cb.offset, cb.dim) = -lam_.segment(cb.offset, cb.dim).array().square();
      } else {
        d.segment(cb.offset, cb.dim) =
            svec(Matrix((-psd_[k].lambda.array().square()).matrix().asDiagonal()));
      }
    }
    return d;
  }

  Vector combined_ds(double sigma_mu, const Step& aff) const {
    Vector d(nc_);
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      const ConicBlock& cb = cblocks_[k];
      if (cb.kind == BlockKind::Nonneg) {
        const auto lam = lam_.segment(cb.offset, cb.dim).array();
        const auto dx = aff.dxc.segment(cb.offset, cb.dim).array();
        const auto ds = aff.dsc.segment(cb.offset, cb.dim).array();
        d.segment(cb.offset, cb.dim) = sigma_mu - lam.square() - dx * ds;
      } else {
        const PsdScaling& sc = psd_[k];
        const Matrix dxs =
            sc.rinv * smat(cb.size, aff.dxc.segment(cb.offset, cb.dim)) * sc.rinv.transpose();
        const Matrix dss =
            sc.r.transpose() * smat(cb.size, aff.dsc.segment(cb.offset, cb.dim)) * sc.r;
        Matrix corr = 0.5 * (dxs * dss + dss * dxs);
        Matrix target = -corr;
        target.diagonal().array() += sigma_mu;
        target.diagonal() -= sc.lambda.array().square().matrix();
        d.segment(cb.offset, cb.dim) = svec(target);
      }
    }
    return d;
  }

  // -- augmented Schur system ----------------------------------------------

  // Builds the (m + nf + 1)-dimensional reduced Newton matrix over
  // (dy, dxf, dtau); dxc, dsc, dkappa are recovered by substitution.
  //   [ Ac H^{-1} Ac'      Af    -(b + Ac H^{-1} cc) ] [dy  ]
  //   [ Af'                0     -cf                 ] [dxf ]
  //   [ (b - Ac H^{-1}cc)' -cf'  cc'H^{-1}cc + k/t   ] [dtau]
  void form_augmented() {
    const int dim = m_ + nf_ + 1;
    aug_.setZero(dim, dim);
    std::vector<Vector> wblk(cblocks_.size());
    std::vector<char> touched(cblocks_.size(), 0);
    for (int j = 0; j < m_; ++j) {
      for (auto& f : touched) f = 0;
      for (const SolverRowPart& part : rows_[j].conic) {
        const ConicBlock& cb = cblocks_[part.cblock];
        if (cb.kind == BlockKind::Nonneg) {
          Vector v = Vector::Zero(cb.dim);
          for (const auto& [idx, val] : part.entries)
            v(idx) = val * sq(w_(cb.offset + idx));
          wblk[part.cblock] = std::move(v);
        } else {
          Matrix a = Matrix::Zero(cb.size, cb.size);
          for (const auto& [idx, val] : part.entries) {
            // scatter svec coordinate back to the symmetric matrix
            int i, jj;
            svec_coords(cb.size, idx, i, jj);
            const double entry = i == jj ? val : val / kSqrt2;
            a(i, jj) = entry;
            a(jj, i) = entry;
          }
          wblk[part.cblock] = svec(psd_[part.cblock].t * a * psd_[part.cblock].t);
        }
        touched[part.cblock] = 1;
      }
      for (int i = 0; i < m_; ++i) {
        double g = 0.0;
        for (const SolverRowPart& part : rows_[i].conic) {
          if (!touched[part.cblock]) continue;
          const Vector& wv = wblk[part.cblock];
          for (const auto& [idx, val] : part.entries) g += val * wv(idx);
        }
        if (g != 0.0) aug_(i, j) = g;
      }
    }
    aug_.block(0, m_, m_, nf_) = af_;
    aug_.block(m_, 0, nf_, m_) = af_.transpose();
    pc_ = hinv_apply(cc_);
    apc_ = apply_a_conic(pc_);
    aug_.block(0, m_ + nf_, m_, 1) = -(b_ + apc_);
    aug_.block(m_, m_ + nf_, nf_, 1) = -cf_;
    aug_.block(m_ + nf_, 0, 1, m_) = (b_ - apc_).transpose();
    aug_.block(m_ + nf_, m_, 1, nf_) = -cf_.transpose();
    aug_(m_ + nf_, m_ + nf_) = cc_.dot(pc_) + kappa_ / tau_;

    // symmetric Ruiz-style equilibration (the matrix is sign-unsymmetric
    // only in the tau row/column) followed by LU with partial pivoting
    equil_ = Vector::Ones(dim);
    aug_scaled_ = aug_;
    for (int pass = 0; pass < 3; ++pass) {
      for (int i = 0; i < dim; ++i) {
        const double rn = std::max(aug_scaled_.row(i).lpNorm<Eigen::Infinity>(),
                                   aug_scaled_.col(i).lpNorm<Eigen::Infinity>());
        const double f = rn > 0 ? 1.0 / std::sqrt(rn) : 1.0;
        equil_(i) *= f;
        aug_scaled_.row(i) *= f;
        aug_scaled_.col(i) *= f;
      }
    }
  }

  bool factorize() {
    use_ld_ = false;
    aug_ld_ = aug_.cast<long double>();
    lu_.compute(aug_scaled_);
    Vector probe = Vector::Ones(aug_.rows());
    Vector sol = lu_.solve(probe);
    return sol.allFinite();
  }

  // Last-resort refactorization in extended precision; activated when the
  // double factorization can no longer produce usable directions.
  void activate_extended_precision() const {
    if (use_ld_) return;
    lu_ld_.compute(aug_ld_);
    use_ld_ = true;
  }

  Vector factor_solve(const Vector& v) const {
    if (use_ld_) return lu_ld_.solve(v.cast<long double>()).cast<double>();
    const Vector scaled = equil_.asDiagonal() * v;
    const Vector z = lu_.solve(scaled);
    return equil_.asDiagonal() * z;
  }

  // Iterative refinement with residuals accumulated in extended precision,
  // which recovers full double accuracy from a marginal factorization.
  Vector solve_aug(const Vector& rhs) const {
    using VectorLd = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const VectorLd rhs_ld = rhs.cast<long double>();
    Vector sol = factor_solve(rhs);
    VectorLd sol_ld = sol.cast<long double>();
    long double best_res = std::numeric_limits<long double>::infinity();
    VectorLd best = sol_ld;
    for (int it = 0; it < st_.refine_steps; ++it) {
      const VectorLd res = rhs_ld - aug_ld_ * sol_ld;
      const long double rn = res.lpNorm<Eigen::Infinity>();
      if (rn < best_res) {
        best_res = rn;
        best = sol_ld;
      }
      sol_ld += factor_solve(res.cast<double>()).cast<long double>();
    }
    if ((rhs_ld - aug_ld_ * sol_ld).lpNorm<Eigen::Infinity>() > best_res) sol_ld = best;
    return sol_ld.cast<double>();
  }

  // Solves the scaled Newton system
  //   A dx - b dtau                    = tp
  //   -Ac' dy + cc dtau - dsc          = tdc   (conic rows)
  //   -Af' dy + cf dtau                = tdf   (free rows; ds_free = 0)
  //   b' dy - c' dx - dkappa           = tg
  //   lambda o (W^{-T} dxc + W dsc)    = ds
  //   tau dkappa + kappa dtau          = dk
  bool direction_core(const Vector& tp, const Vector& tdc, const Vector& tdf, double tg,
                      const Vector& ds, double dk, Step& out) const {
    const Vector gc = tdc + winv_linv(ds);
    Vector rhs(m_ + nf_ + 1);
    rhs.head(m_) = tp - apply_a_conic(hinv_apply(gc));
    rhs.segment(m_, nf_) = -tdf;
    rhs(m_ + nf_) = tg + pc_.dot(gc) + dk / tau_;
    const Vector sol = solve_aug(rhs);
    if (!sol.allFinite()) return false;

    out.dy = sol.head(m_);
    out.dxf = sol.segment(m_, nf_);
    out.dtau = sol(m_ + nf_);
    const Vector aty = apply_at_conic(out.dy);
    out.dxc = hinv_apply(gc + aty - cc_ * out.dtau);
    out.dsc = -aty + cc_ * out.dtau - tdc;
    out.dkappa = (dk - kappa_ * out.dtau) / tau_;
    return out.dxc.allFinite() && out.dsc.allFinite();
  }

  /// lambda o (W^{-T} dxc + W dsc), evaluated blockwise in the scaled frame.
  Vector scaled_complementarity(const Step& st) const {
    Vector out(nc_);
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      const ConicBlock& cb = cblocks_[k];
      if (cb.kind == BlockKind::Nonneg) {
        const auto dx = st.dxc.segment(cb.offset, cb.dim).array();
        const auto dsv = st.dsc.segment(cb.offset, cb.dim).array();
        const auto w = w_.segment(cb.offset, cb.dim).array();
        const auto lam = lam_.segment(cb.offset, cb.dim).array();
        out.segment(cb.offset, cb.dim) = lam * (dx / w + w * dsv);
      } else {
        const PsdScaling& sc = psd_[k];
        const MatrixLd dxs =
            sc.rinv_ld * smat_ld(cb.size, st.dxc.segment(cb.offset, cb.dim).cast<long double>()) *
            sc.rinv_ld.transpose();
        const MatrixLd dss =
            sc.r_ld.transpose() *
            smat_ld(cb.size, st.dsc.segment(cb.offset, cb.dim).cast<long double>()) * sc.r_ld;
        const MatrixLd z = dxs + dss;
        const MatrixLd lz = sc.lambda_ld.asDiagonal() * z;
        out.segment(cb.offset, cb.dim) = svec_ld(MatrixLd(0.5L * (lz + lz.transpose()))).cast<double>();
      }
    }
    return out;
  }

  double newton_defect(const Vector& tp, const Vector& tdc, const Vector& tdf, double tg,
                       const Vector& ds, double dk, const Step& st, Vector& d1, Vector& d2c,
                       Vector& d2f, double& d3, Vector& d4, double& d5) const {
    d1 = tp - (apply_a(st.dxc, st.dxf) - b_ * st.dtau);
    d2c = tdc - (-apply_at_conic(st.dy) + cc_ * st.dtau - st.dsc);
    d2f = tdf - (-apply_at_free(st.dy) + cf_ * st.dtau);
    d3 = tg - (b_.dot(st.dy) - cc_.dot(st.dxc) - cf_.dot(st.dxf) - st.dkappa);
    d4 = ds - scaled_complementarity(st);
    d5 = dk - (tau_ * st.dkappa + kappa_ * st.dtau);
    return std::max({d1.lpNorm<Eigen::Infinity>(), d2c.lpNorm<Eigen::Infinity>(),
                     nf_ ? d2f.lpNorm<Eigen::Infinity>() : 0.0, std::abs(d3),
                     d4.lpNorm<Eigen::Infinity>(), std::abs(d5)});
  }

  // Refinement on the full Newton system: the direction map is linear, so
  // re-solving with the defect right-hand sides sharpens the step. This is
  // what keeps late iterations usable once the scaling matrices become
  // badly conditioned.
  double refine_direction(const Vector& tp, const Vector& tdc, const Vector& tdf, double tg,
                          const Vector& ds, double dk, Step& out) const {
    Vector d1, d2c, d2f, d4;
    double d3, d5;
    double best =
        newton_defect(tp, tdc, tdf, tg, ds, dk, out, d1, d2c, d2f, d3, d4, d5);
    for (int round = 0; round < 3; ++round) {
      if (!std::isfinite(best) || best < 1e-13) break;
      Step corr;
      if (!direction_core(d1, d2c, d2f, d3, d4, d5, corr)) break;
      Step trial = out;
      trial.dxc += corr.dxc;
      trial.dxf += corr.dxf;
      trial.dy += corr.dy;
      trial.dsc += corr.dsc;
      trial.dtau += corr.dtau;
      trial.dkappa += corr.dkappa;
      const double defect =
          newton_defect(tp, tdc, tdf, tg, ds, dk, trial, d1, d2c, d2f, d3, d4, d5);
      if (!std::isfinite(defect) || defect >= best) break;
      out = trial;
      best = defect;
    }
    return best;
  }

  bool direction(double eta, const Vector& rp, const Vector& rdc, const Vector& rdf, double rg,
                 const Vector& ds, double dk, Step& out) const {
    const Vector tp = -eta * rp;
    const Vector tdc = -eta * rdc;
    const Vector tdf = -eta * rdf;
    const double tg = -eta * rg;
    const double rhs_scale =
        std::max({tp.lpNorm<Eigen::Infinity>(), tdc.lpNorm<Eigen::Infinity>(),
                  nf_ ? tdf.lpNorm<Eigen::Infinity>() : 0.0, std::abs(tg),
                  ds.lpNorm<Eigen::Infinity>(), std::abs(dk)});
    // a usable step must reduce the Newton residuals well below the current
    // level, otherwise it only injects noise into the iterate
    const double accept = std::max(1e-13, 0.1 * rhs_scale);
    if (!direction_core(tp, tdc, tdf, tg, ds, dk, out)) {
      if (st_.verbose) std::fprintf(stderr, "   direction_core non-finite\n");
      return false;
    }
    double defect = refine_direction(tp, tdc, tdf, tg, ds, dk, out);
    if (!(defect <= accept)) {
      activate_extended_precision();
      Step retry;
      if (direction_core(tp, tdc, tdf, tg, ds, dk, retry)) {
        const double d2 = refine_direction(tp, tdc, tdf, tg, ds, dk, retry);
        if (d2 < defect) {
          out = retry;
          defect = d2;
        }
      }
    }
    if (st_.verbose && !(defect <= accept))
      std::fprintf(stderr, "   direction rejected: defect %9.2e accept %9.2e rhs %9.2e\n", defect,
                   accept, rhs_scale);
    return std::isfinite(defect) && defect <= accept;
  }

  double step_to_boundary(const Step& st) const {
    double alpha = std::numeric_limits<double>::infinity();
    auto psd_limit = [&](const Eigen::LLT<Matrix>& llt, const Matrix& delta) {
      const Matrix l = llt.matrixL();
      const Matrix tmp = l.triangularView<Eigen::Lower>().solve(delta);
      const Matrix inner =
          l.triangularView<Eigen::Lower>().solve(Matrix(tmp.transpose()));
      Eigen::SelfAdjointEigenSolver<Matrix> es((inner + inner.transpose()) / 2.0,
                                               Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues().minCoeff();
      if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
    };
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      const ConicBlock& cb = cblocks_[k];
      if (cb.kind == BlockKind::Nonneg) {
        for (int i = 0; i < cb.dim; ++i) {
          if (st.dxc(cb.offset + i) < 0)
            alpha = std::min(alpha, -xc_(cb.offset + i) / st.dxc(cb.offset + i));
          if (st.dsc(cb.offset + i) < 0)
            alpha = std::min(alpha, -sc_(cb.offset + i) / st.dsc(cb.offset + i));
        }
      } else {
        psd_limit(psd_[k].llt_x, smat(cb.size, st.dxc.segment(cb.offset, cb.dim)));
        psd_limit(psd_[k].llt_s, smat(cb.size, st.dsc.segment(cb.offset, cb.dim)));
      }
    }
    if (st.dtau < 0) alpha = std::min(alpha, -tau_ / st.dtau);
    if (st.dkappa < 0) alpha = std::min(alpha, -kappa_ / st.dkappa);
    return alpha;
  }

  // -- termination -----------------------------------------------------------

  struct Metrics {
    double pres, dres, relgap, pobj, dobj;
    double worst() const { return std::max({pres, dres, relgap}); }
  };

  Metrics metrics() const {
    const Vector ax = apply_a(xc_, xf_);
    const Vector atyc = apply_at_conic(y_);
    const Vector atyf = apply_at_free(y_);
    const double cx = cc_.dot(xc_) + cf_.dot(xf_);
    const double by = b_.dot(y_);
    Metrics mt;
    mt.pobj = cx / tau_;
    mt.dobj = by / tau_;
    mt.pres = (ax - b_ * tau_).norm() / (tau_ * (1.0 + b_.norm()));
    const double dres2 =
        (-atyc + cc_ * tau_ - sc_).squaredNorm() + (-atyf + cf_ * tau_).squaredNorm();
    mt.dres =
        std::sqrt(dres2) / (tau_ * (1.0 + std::sqrt(cc_.squaredNorm() + cf_.squaredNorm())));
    const double gap = xc_.dot(sc_) / sq(tau_);
    mt.relgap = gap / (1.0 + std::max(std::abs(mt.pobj), std::abs(mt.dobj)));
    return mt;
  }

  SdpSolution optimal_from_state(const Metrics& mt, int iter) const {
    SdpSolution out;
    out.status = SolveStatus::Optimal;
    fill_point(out, 1.0 / tau_);
    out.objective = mt.pobj;
    out.dual_objective = mt.dobj;
    out.primal_residual = mt.pres;
    out.dual_residual = mt.dres;
    out.gap_residual = mt.relgap;
    out.iterations = iter;
    return out;
  }

  void snapshot_if_best(const Metrics& mt) {
    if (!best_ || mt.worst() < best_->mt.worst())
      best_ = Snapshot{mt, xc_, xf_, y_, sc_, tau_, kappa_};
  }

  /// Terminal wrap-up on breakdown: restore the best recorded iterate and
  /// classify it honestly against the tolerance.
  SdpSolution finalize(int iter, const std::string& why) {
    if (best_) {
      xc_ = best_->xc;
      xf_ = best_->xf;
      y_ = best_->y;
      sc_ = best_->sc;
      tau_ = best_->tau;
      kappa_ = best_->kappa;
      if (best_->mt.worst() <= st_.tol) return optimal_from_state(best_->mt, iter);
    }
    SdpSolution out;
    out.status = SolveStatus::Indeterminate;
    fill_point(out, tau_ > 0 ? 1.0 / tau_ : 1.0);
    if (best_) {
      out.primal_residual = best_->mt.pres;
      out.dual_residual = best_->mt.dres;
      out.gap_residual = best_->mt.relgap;
    }
    out.iterations = iter;
    out.message = why;
    return out;
  }

  std::optional<SdpSolution> check_termination(int iter) {
    const Metrics mt = metrics();
    if (st_.verbose)
      std::fprintf(stderr, "   term it %3d pres %9.2e dres %9.2e relgap %9.2e pobj %9.2e\n",
                   iter, mt.pres, mt.dres, mt.relgap, mt.pobj);
    if (mt.pres <= st_.tol && mt.dres <= st_.tol && mt.relgap <= st_.tol)
      return optimal_from_state(mt, iter);
    snapshot_if_best(mt);

    // Farkas-type certificates from the homogeneous iterate
    const Vector ax = apply_a(xc_, xf_);
    const Vector atyc = apply_at_conic(y_);
    const Vector atyf = apply_at_free(y_);
    const double cx = cc_.dot(xc_) + cf_.dot(xf_);
    const double by = b_.dot(y_);
    if (by > 0) {
      const double res =
          ((atyc + sc_).lpNorm<Eigen::Infinity>() + atyf.lpNorm<Eigen::Infinity>()) / by;
      if (res <= st_.infeas_tol * data_scale_) {
        SdpSolution out;
        out.status = SolveStatus::PrimalInfeasible;
        fill_point(out, 1.0 / by);
        out.certificate_violation = 1.0 - res;
        out.iterations = iter;
        out.message = "primal infeasibility certificate: b'y = 1, ||A'y + s|| = " +
                      std::to_string(res);
        return out;
      }
    }
    if (cx < 0) {
      const double res = ax.lpNorm<Eigen::Infinity>() / (-cx);
      if (res <= st_.infeas_tol * data_scale_) {
        SdpSolution out;
        out.status = SolveStatus::DualInfeasible;
        fill_point(out, 1.0 / (-cx));
        out.certificate_violation = 1.0 - res;
        out.iterations = iter;
        out.message = "dual infeasibility certificate: c'x = -1, ||Ax|| = " + std::to_string(res);
        return out;
      }
    }
    return std::nullopt;
  }

  void fill_point(SdpSolution& out, double scale) const {
    out.x.resize(p_.num_blocks());
    out.s.resize(p_.num_blocks());
    for (size_t k = 0; k < cblocks_.size(); ++k) {
      out.x[cblocks_[k].problem_block] = scale * xc_.segment(cblocks_[k].offset, cblocks_[k].dim);
      out.s[cblocks_[k].problem_block] = scale * sc_.segment(cblocks_[k].offset, cblocks_[k].dim);
    }
    for (const FreeBlock& fb : fblocks_) {
      out.x[fb.problem_block] = scale * xf_.segment(fb.offset, fb.size);
      out.s[fb.problem_block] = Vector::Zero(fb.size);
    }
    out.y = scale * y_;
  }

  // Analytic handling of degenerate shapes the interior-point loop is not
  // meant for.
  SdpSolution solve_unconstrained() const {
    SdpSolution out;
    out.y = Vector::Zero(0);
    out.x.resize(p_.num_blocks());
    out.s.resize(p_.num_blocks());
    for (int b = 0; b < p_.num_blocks(); ++b) {
      out.x[b] = Vector::Zero(p_.blocks()[b].dim());
      out.s[b] = p_.objective(b);
    }
    // bounded iff the objective lies in the dual cone
    for (int b = 0; b < p_.num_blocks(); ++b) {
      const BlockDesc& d = p_.blocks()[b];
      const Vector& c = p_.objective(b);
      bool ok = true;
      if (d.kind == BlockKind::Free)
        ok = c.lpNorm<Eigen::Infinity>() <= st_.tol * data_scale_;
      else if (d.kind == BlockKind::Nonneg)
        ok = c.minCoeff() >= -st_.tol * data_scale_;
      else
        ok = min_eigenvalue(SymMatrix(smat(d.size, c))) >= -st_.tol * data_scale_;
      if (!ok) {
        SdpSolution ray;
        ray.status = SolveStatus::DualInfeasible;
        ray.y = Vector::Zero(0);
        ray.x.resize(p_.num_blocks());
        ray.s.resize(p_.num_blocks());
        for (int bb = 0; bb < p_.num_blocks(); ++bb) {
          ray.x[bb] = Vector::Zero(p_.blocks()[bb].dim());
          ray.s[bb] = Vector::Zero(p_.blocks()[bb].dim());
        }
        if (d.kind == BlockKind::Psd) {
          const EigenDecomposition e = eig_sym(SymMatrix(smat(d.size, c)));
          const Vector v = e.eigenvectors.col(d.size - 1);
          ray.x[b] = svec(v * v.transpose());
        } else {
          int imin;
          c.minCoeff(&imin);
          ray.x[b] = Vector::Zero(d.dim());
          ray.x[b](imin) = 1.0;
          if (d.kind == BlockKind::Free && c(imin) > 0) ray.x[b](imin) = -1.0;
        }
        const double cx = p_.objective_value(ray.x);
        for (auto& xb : ray.x) xb /= -cx;
        ray.certificate_violation = 1.0;
        ray.message = "unconstrained objective is unbounded below";
        return ray;
      }
    }
    out.status = SolveStatus::Optimal;
    out.objective = 0.0;
    out.dual_objective = 0.0;
    out.primal_residual = out.dual_residual = out.gap_residual = 0.0;
    return out;
  }

  SdpSolution solve_linear() const {
    // equality-constrained linear program over free variables only
    SdpSolution out;
    Eigen::ColPivHouseholderQR<Matrix> qr(af_);
    const Vector x0 = qr.solve(b_);
    const Vector pres = af_ * x0 - b_;
    if (pres.lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + b_.lpNorm<Eigen::Infinity>())) {
      out.status = SolveStatus::PrimalInfeasible;
      out.y = -pres / pres.squaredNorm();
      out.certificate_violation = 1.0;
      out.message = "inconsistent linear system over free variables";
      out.x.resize(p_.num_blocks());
      out.s.resize(p_.num_blocks());
      for (int b = 0; b < p_.num_blocks(); ++b) {
        out.x[b] = Vector::Zero(p_.blocks()[b].dim());
        out.s[b] = Vector::Zero(p_.blocks()[b].dim());
      }
      return out;
    }
    Eigen::ColPivHouseholderQR<Matrix> qrt(Matrix(af_.transpose()));
    const Vector y0 = qrt.solve(cf_);
    const Vector dres = af_.transpose() * y0 - cf_;
    if (dres.lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + cf_.lpNorm<Eigen::Infinity>())) {
      out.status = SolveStatus::DualInfeasible;
      Vector ray = -dres;
      const double cx = cf_.dot(ray);
      ray /= -cx;
      out.x.resize(p_.num_blocks());
      out.s.resize(p_.num_blocks());
      for (const FreeBlock& fb : fblocks_) {
        out.x[fb.problem_block] = ray.segment(fb.offset, fb.size);
        out.s[fb.problem_block] = Vector::Zero(fb.size);
      }
      out.y = Vector::Zero(m_);
      out.certificate_violation = 1.0;
      out.message = "objective unbounded along the feasible affine subspace";
      return out;
    }
    out.status = SolveStatus::Optimal;
    out.x.resize(p_.num_blocks());
    out.s.resize(p_.num_blocks());
    for (const FreeBlock& fb : fblocks_) {
      out.x[fb.problem_block] = x0.segment(fb.offset, fb.size);
      out.s[fb.problem_block] = Vector::Zero(fb.size);
    }
    out.y = y0;
    out.objective = cf_.dot(x0);
    out.dual_objective = b_.dot(y0);
    out.primal_residual = pres.lpNorm<Eigen::Infinity>();
    out.dual_residual = dres.lpNorm<Eigen::Infinity>();
    out.gap_residual = std::abs(out.objective - out.dual_objective) /
                       (1.0 + std::max(std::abs(out.objective), std::abs(out.dual_objective)));
    return out;
  }

  static void svec_coords(int order, int idx, int& i, int& j) {
    j = 0;
    int base = 0;
    while (idx - base >= order - j) {
      base += order - j;
      ++j;
    }
    i = j + (idx - base);
  }

  const SdpProblem& p_;
  SolverSettings st_;
  int m_ = 0, nc_ = 0, nf_ = 0;
  double nu_ = 0.0, data_scale_ = 1.0;
  std::vector<ConicBlock> cblocks_;
  std::vector<FreeBlock> fblocks_;
  std::vector<int> block_to_conic_, block_to_free_;
  std::vector<SolverRow> rows_;
  Matrix af_;
  Vector b_, cc_, cf_;

  Vector xc_, xf_, y_, sc_;
  double tau_ = 1.0, kappa_ = 1.0;
  int iters_ = 0;

  std::vector<PsdScaling> psd_;
  Vector w_, lam_;
  Matrix aug_, aug_scaled_;
  Vector equil_, pc_, apc_;
  struct Snapshot {
    Metrics mt;
    Vector xc, xf, y, sc;
    double tau, kappa;
  };
  std::optional<Snapshot> best_;
  Eigen::PartialPivLU<Matrix> lu_;
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> aug_ld_;
  mutable Eigen::PartialPivLU<Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>> lu_ld_;
  mutable bool use_ld_ = false;
};

}  // namespace detail

/// Solves a standard-form conic program. Runs the cheap presolve
/// transformations first and maps the solution back to the original
/// coordinates; statuses carry certificates as documented on SdpSolution.
inline SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings = {}) {
  if (!(settings.tol > 0.0) || settings.tol > 1e-2)
    throw std::invalid_argument("SolverSettings.tol must lie in (0, 1e-2]");

  PresolveOutcome pre;
  if (settings.presolve) {
    pre = presolve(problem, settings.eliminate_dependent_rows);
  } else {
    pre.problem = problem;
    pre.original_rows = problem.num_rows();
    pre.original_blocks = problem.blocks();
    pre.var_map.resize(problem.num_blocks());
    pre.fixed.resize(problem.num_blocks());
    for (int b = 0; b < problem.num_blocks(); ++b) {
      pre.var_map[b].resize(problem.blocks()[b].dim());
      for (int i = 0; i < problem.blocks()[b].dim(); ++i) pre.var_map[b][i] = i;
      pre.fixed[b].assign(problem.blocks()[b].dim(), 0.0);
    }
    pre.kept_rows.resize(problem.num_rows());
    for (int r = 0; r < problem.num_rows(); ++r) pre.kept_rows[r] = r;
  }

  if (pre.infeasible) {
    SdpSolution out;
    out.status = SolveStatus::PrimalInfeasible;
    out.message = "presolve: " + pre.infeasible_reason;
    out.certificate_violation = 1.0;
    out.y = Vector::Zero(problem.num_rows());
    out.x.resize(problem.num_blocks());
    out.s.resize(problem.num_blocks());
    for (int b = 0; b < problem.num_blocks(); ++b) {
      out.x[b] = Vector::Zero(problem.blocks()[b].dim());
      out.s[b] = Vector::Zero(problem.blocks()[b].dim());
    }
    return out;
  }

  detail::HsdSolver solver(pre.problem, settings);
  SdpSolution red = solver.run();

  // One retry with full dependent-row elimination when the fast path could
  // not resolve the instance.
  if (red.status == SolveStatus::Indeterminate && settings.presolve &&
      !settings.eliminate_dependent_rows) {
    SolverSettings retry = settings;
    retry.eliminate_dependent_rows = true;
    return solve(problem, retry);
  }

  // back-map to original blocks and rows
  SdpSolution out = red;
  out.x.assign(problem.num_blocks(), Vector());
  out.s.assign(problem.num_blocks(), Vector());
  out.y = Vector::Zero(problem.num_rows());
  int reduced_block = 0;
  std::vector<int> block_map(problem.num_blocks(), -1);
  for (int b = 0; b < problem.num_blocks(); ++b) {
    bool any_kept = false;
    for (int i = 0; i < problem.blocks()[b].dim(); ++i)
      if (pre.var_map[b][i] >= 0) any_kept = true;
    if (any_kept) block_map[b] = reduced_block++;
  }
  for (size_t i = 0; i < pre.kept_rows.size(); ++i) out.y(pre.kept_rows[i]) = red.y(i);
  for (int b = 0; b < problem.num_blocks(); ++b) {
    const int dim = problem.blocks()[b].dim();
    out.x[b] = Vector::Zero(dim);
    out.s[b] = Vector::Zero(dim);
    for (int i = 0; i < dim; ++i) {
      if (pre.var_map[b][i] >= 0) {
        out.x[b](i) = red.x[block_map[b]](pre.var_map[b][i]);
        out.s[b](i) = red.s[block_map[b]](pre.var_map[b][i]);
      } else {
        out.x[b](i) = pre.fixed[b][i];
        out.s[b](i) = problem.objective(b)(i);
      }
    }
  }
  // complete dual slacks of fixed coordinates: s = c - A'y
  for (int r = 0; r < problem.num_rows(); ++r) {
    const double yr = out.y(r);
    if (yr == 0.0) continue;
    for (const Coef& c : problem.rows()[r].coefs)
      if (pre.var_map[c.block][c.index] < 0) out.s[c.block](c.index) -= c.value * yr;
  }
  if (red.status == SolveStatus::Optimal) {
    out.objective = red.objective + pre.objective_offset;
    out.dual_objective = red.dual_objective + pre.objective_offset;
  }
  return out;
}

}  // namespace procrustes
