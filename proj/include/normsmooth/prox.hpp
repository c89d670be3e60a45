#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "normsmooth/types.hpp"

namespace normsmooth {

enum class ProxKind { L1, GroupL2, BoxPlusL1, Zero };

/// A generalized derivative D of the proximity operator, bound to a point z
/// and stepsize lambda. Symmetric positive semidefinite with eigenvalues in
/// [0, 1]; applied as a linear operator, never materialized except for tests.
class ProxDerivative {
 public:
  enum class Structure { Identity, DiagonalMask, BlockLowRank, Zero };

  Index dim() const { return dim_; }
  Structure structure() const { return structure_; }
  double stepsize() const { return lambda_; }
  const Vector& point() const { return point_; }

  Vector apply(const Vector& v) const {
    if (v.size() != dim_) throw std::invalid_argument("ProxDerivative::apply: size mismatch");
    switch (structure_) {
      case Structure::Identity:
        return v;
      case Structure::Zero:
        return Vector::Zero(dim_);
      case Structure::DiagonalMask:
        return mask_.cwiseProduct(v);
      case Structure::BlockLowRank: {
        Vector out = Vector::Zero(dim_);
        for (std::size_t g = 0; g < blocks_.size(); ++g) {
          const Block& blk = blocks_[g];
          if (!blk.active) continue;
          const Vector vg = gather(v, g);
          const double zv = blk.z.dot(vg);
          for (Index i = 0; i < blk.z.size(); ++i) {
            out[index_[offset_[g] + i]] = blk.scale * vg[i] + blk.coef * zv * blk.z[i];
          }
        }
        return out;
      }
    }
    return v;
  }

  /// Dense export, test-only path.
  Matrix dense() const {
    if (dim_ > 200) throw std::logic_error("ProxDerivative::dense: reserved for tests at n <= 200");
    Matrix out = Matrix::Zero(dim_, dim_);
    switch (structure_) {
      case Structure::Identity:
        out.setIdentity();
        break;
      case Structure::Zero:
        break;
      case Structure::DiagonalMask:
        out.diagonal() = mask_;
        break;
      case Structure::BlockLowRank:
        for (std::size_t g = 0; g < blocks_.size(); ++g) {
          const Block& blk = blocks_[g];
          if (!blk.active) continue;
          const Index m = blk.z.size();
          Matrix local = blk.scale * Matrix::Identity(m, m) + blk.coef * (blk.z * blk.z.transpose());
          for (Index r = 0; r < m; ++r)
            for (Index c = 0; c < m; ++c)
              out(index_[offset_[g] + r], index_[offset_[g] + c]) = local(r, c);
        }
        break;
    }
    return out;
  }

 private:
  friend class ProxOperator;

  struct Block {
    bool active = false;
    double scale = 0.0;  // 1 - mu*lambda/||z_g||
    double coef = 0.0;   // mu*lambda/||z_g||^3
    Vector z;            // group slice of the base point
  };

  Vector gather(const Vector& v, std::size_t g) const {
    const Index m = offset_[g + 1] - offset_[g];
    Vector out(m);
    for (Index i = 0; i < m; ++i) out[i] = v[index_[offset_[g] + i]];
    return out;
  }

  Index dim_ = 0;
  Structure structure_ = Structure::Identity;
  double lambda_ = 1.0;
  Vector point_;
  Vector mask_;                 // diagonal structures
  std::vector<Block> blocks_;   // block structure
  std::vector<Index> index_;    // group-major flattened indices
  std::vector<Index> offset_;   // per-group offsets into index_
};

/// Proximity operator of one of the supported regularizers, together with its
/// value phi and a generalized derivative selection. Immutable and pure.
class ProxOperator {
 public:
  static ProxOperator l1(double mu) { return ProxOperator(ProxKind::L1, mu); }

  static ProxOperator box_plus_l1(double mu) { return ProxOperator(ProxKind::BoxPlusL1, mu); }

  static ProxOperator zero() { return ProxOperator(ProxKind::Zero, 0.0); }

  /// groups must partition {0..n-1} with no overlap; blocks are made
  /// contiguous internally through a stored index permutation.
  static ProxOperator group_l2(double mu, const std::vector<std::vector<Index>>& groups) {
    ProxOperator op(ProxKind::GroupL2, mu);
    Index total = 0;
    for (const auto& g : groups) {
      if (g.empty()) throw std::invalid_argument("group_l2: empty group");
      total += static_cast<Index>(g.size());
    }
    std::vector<char> seen(total, 0);
    op.offset_.push_back(0);
    for (const auto& g : groups) {
      for (Index idx : g) {
        if (idx < 0 || idx >= total) throw std::invalid_argument("group_l2: index outside {0..n-1}");
        if (seen[idx]) throw std::invalid_argument("group_l2: overlapping groups");
        seen[idx] = 1;
        op.index_.push_back(idx);
      }
      op.offset_.push_back(static_cast<Index>(op.index_.size()));
    }
    op.dim_ = total;
    return op;
  }

  ProxKind kind() const { return kind_; }
  double mu() const { return mu_; }
  /// Fixed dimension for group-structured operators, 0 for separable ones.
  Index dim() const { return dim_; }
  Index group_count() const { return static_cast<Index>(offset_.size()) - 1; }

  /// prox_{lambda*phi}(z), the unique minimizer of phi(y) + ||z-y||^2/(2 lambda).
  Vector prox(const Vector& z, double lambda) const {
    check_point(z, lambda);
    const double t = mu_ * lambda;
    switch (kind_) {
      case ProxKind::Zero:
        return z;
      case ProxKind::L1: {
        Vector out(z.size());
        for (Index i = 0; i < z.size(); ++i) out[i] = soft(z[i], t);
        return out;
      }
      case ProxKind::BoxPlusL1: {
        Vector out(z.size());
        for (Index i = 0; i < z.size(); ++i) out[i] = std::clamp(soft(z[i], t), 0.0, 1.0);
        return out;
      }
      case ProxKind::GroupL2: {
        Vector out = Vector::Zero(z.size());
        for (Index g = 0; g < group_count(); ++g) {
          const double r = group_norm(z, g);
          if (r > t) {
            const double scale = 1.0 - t / r;
            for (Index i = offset_[g]; i < offset_[g + 1]; ++i) out[index_[i]] = scale * z[index_[i]];
          }
        }
        return out;
      }
    }
    return z;
  }

  /// phi(x); +inf outside the box for the box-plus-l1 kind.
  double phi(const Vector& x) const {
    switch (kind_) {
      case ProxKind::Zero:
        return 0.0;
      case ProxKind::L1:
        return mu_ * x.lpNorm<1>();
      case ProxKind::BoxPlusL1: {
        for (Index i = 0; i < x.size(); ++i)
          if (!(x[i] >= 0.0 && x[i] <= 1.0)) return std::numeric_limits<double>::infinity();
        return mu_ * x.lpNorm<1>();
      }
      case ProxKind::GroupL2: {
        if (x.size() != dim_) throw std::invalid_argument("phi: size mismatch");
        double sum = 0.0;
        for (Index g = 0; g < group_count(); ++g) sum += group_norm(x, g);
        return mu_ * sum;
      }
    }
    return 0.0;
  }

  /// D*v for the selected generalized derivative at (z, lambda).
  Vector derivative_apply(const Vector& z, double lambda, const Vector& v) const {
    return derivative(z, lambda).apply(v);
  }

  /// Projection of `target` onto the preimage {z : prox(z, lambda) = x},
  /// computed blockwise. Requires x in the range of the operator. The zero
  /// kind reports no blockwise form (false) and leaves `out` untouched.
  bool preimage_projection(const Vector& x, const Vector& target, double lambda, Vector& out) const {
    check_point(x, lambda);
    const double t = mu_ * lambda;
    switch (kind_) {
      case ProxKind::Zero:
        return false;
      case ProxKind::L1: {
        out.resize(x.size());
        for (Index i = 0; i < x.size(); ++i) {
          if (x[i] > 0.0)
            out[i] = x[i] + t;
          else if (x[i] < 0.0)
            out[i] = x[i] - t;
          else
            out[i] = std::clamp(target[i], -t, t);
        }
        return true;
      }
      case ProxKind::BoxPlusL1: {
        out.resize(x.size());
        for (Index i = 0; i < x.size(); ++i) {
          if (x[i] <= 0.0)
            out[i] = std::min(target[i], t);
          else if (x[i] >= 1.0)
            out[i] = std::max(target[i], t + 1.0);
          else
            out[i] = x[i] + t;
        }
        return true;
      }
      case ProxKind::GroupL2: {
        out.resize(x.size());
        for (Index g = 0; g < group_count(); ++g) {
          const double rx = group_norm(x, g);
          if (rx > 0.0) {
            const double scale = 1.0 + t / rx;
            for (Index i = offset_[g]; i < offset_[g + 1]; ++i) out[index_[i]] = scale * x[index_[i]];
          } else {
            const double rt = group_norm(target, g);
            const double scale = rt > t ? t / rt : 1.0;
            for (Index i = offset_[g]; i < offset_[g + 1]; ++i) out[index_[i]] = scale * target[index_[i]];
          }
        }
        return true;
      }
    }
    return false;
  }

  ProxDerivative derivative(const Vector& z, double lambda) const {
    check_point(z, lambda);
    const double t = mu_ * lambda;
    ProxDerivative d;
    d.dim_ = z.size();
    d.lambda_ = lambda;
    d.point_ = z;
    switch (kind_) {
      case ProxKind::Zero:
        d.structure_ = ProxDerivative::Structure::Identity;
        break;
      case ProxKind::L1: {
        d.structure_ = ProxDerivative::Structure::DiagonalMask;
        d.mask_.resize(z.size());
        bool any = false;
        for (Index i = 0; i < z.size(); ++i) {
          d.mask_[i] = std::abs(z[i]) <= t ? 0.0 : 1.0;
          any = any || d.mask_[i] != 0.0;
        }
        if (!any) d.structure_ = ProxDerivative::Structure::Zero;
        break;
      }
      case ProxKind::BoxPlusL1: {
        d.structure_ = ProxDerivative::Structure::DiagonalMask;
        d.mask_.resize(z.size());
        bool any = false;
        for (Index i = 0; i < z.size(); ++i) {
          d.mask_[i] = (z[i] <= t || z[i] >= t + 1.0) ? 0.0 : 1.0;
          any = any || d.mask_[i] != 0.0;
        }
        if (!any) d.structure_ = ProxDerivative::Structure::Zero;
        break;
      }
      case ProxKind::GroupL2: {
        d.structure_ = ProxDerivative::Structure::BlockLowRank;
        d.index_ = index_;
        d.offset_ = offset_;
        d.blocks_.resize(group_count());
        bool any = false;
        for (Index g = 0; g < group_count(); ++g) {
          const double r = group_norm(z, g);
          auto& blk = d.blocks_[g];
          if (r > t) {
            blk.active = true;
            blk.scale = 1.0 - t / r;
            blk.coef = t / (r * r * r);
            blk.z.resize(offset_[g + 1] - offset_[g]);
            for (Index i = offset_[g]; i < offset_[g + 1]; ++i) blk.z[i - offset_[g]] = z[index_[i]];
            any = true;
          }
        }
        if (!any) d.structure_ = ProxDerivative::Structure::Zero;
        break;
      }
    }
    return d;
  }

 private:
  ProxOperator(ProxKind kind, double mu) : kind_(kind), mu_(mu) {
    if (!(mu >= 0.0)) throw std::invalid_argument("ProxOperator: mu must be >= 0");
  }

  static double soft(double z, double t) {
    const double a = std::abs(z) - t;
    return a > 0.0 ? (z > 0.0 ? a : -a) : 0.0;
  }

  double group_norm(const Vector& z, Index g) const {
    double sq = 0.0;
    for (Index i = offset_[g]; i < offset_[g + 1]; ++i) sq += z[index_[i]] * z[index_[i]];
    return std::sqrt(sq);
  }

  void check_point(const Vector& z, double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("prox: stepsize must be positive");
    if (!z.allFinite()) throw std::invalid_argument("prox: non-finite input");
    if (kind_ == ProxKind::GroupL2 && z.size() != dim_)
      throw std::invalid_argument("prox: size mismatch against group structure");
  }

  ProxKind kind_;
  double mu_;
  Index dim_ = 0;
  std::vector<Index> index_;
  std::vector<Index> offset_ = {0};
};

}  // namespace normsmooth
