// Dense symmetric linear algebra used by the protocol: SPD solves, inverse
// norms, symmetrization and eigenvalue bounds. Dimensions stay small (d <= 64
// model space, d^2 flattenings inside aggregation), so everything is direct
// dense math backed by Eigen.
#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "byzbandit/errors.hpp"
#include "byzbandit/rng.hpp"

namespace byzbandit {

// Absolute entrywise tolerance for accepting a matrix as symmetric.
constexpr double kSymmetryTol = 1e-9;

inline bool all_finite(const Matrix& a) { return a.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

// Largest |a_ij - a_ji| over all pairs.
inline double asymmetry(const Matrix& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& a, double tol = kSymmetryTol) {
  return a.rows() == a.cols() && asymmetry(a) <= tol;
}

// Symmetric matrix with validated construction. Entries are finite and
// symmetric within kSymmetryTol; exact_symmetrized() is the only route that
// accepts arbitrary square input.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw ConfigError("SymMatrix: matrix is not square");
    }
    if (!all_finite(m_)) {
      throw ConfigError("SymMatrix: non-finite entry");
    }
    if (asymmetry(m_) > kSymmetryTol) {
      throw ConfigError("SymMatrix: asymmetry " + std::to_string(asymmetry(m_)) +
                        " exceeds tolerance");
    }
  }

  // (A + A^T) / 2 with bitwise-exact symmetry: entry (i, j) and (j, i) are
  // computed from the same two addends, and (x + x) / 2 == x in IEEE double.
  static SymMatrix exact_symmetrized(const Matrix& a) {
    if (a.rows() != a.cols()) {
      throw ConfigError("symmetrize: matrix is not square");
    }
    Matrix s(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = i; j < a.cols(); ++j) {
        const double v = (a(i, j) + a(j, i)) / 2.0;
        s(i, j) = v;
        s(j, i) = v;
      }
    }
    if (!all_finite(s)) {
      throw ConfigError("symmetrize: non-finite entry");
    }
    return SymMatrix(PrivateTag{}, std::move(s));
  }

  static SymMatrix identity(int d, double scale) {
    return SymMatrix(PrivateTag{}, Matrix::Identity(d, d) * scale);
  }

  static SymMatrix zero(int d) { return SymMatrix(PrivateTag{}, Matrix::Zero(d, d)); }

  const Matrix& mat() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

 private:
  struct PrivateTag {};
  SymMatrix(PrivateTag, Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

inline SymMatrix symmetrize(const Matrix& a) { return SymMatrix::exact_symmetrized(a); }

// Cholesky factorization of an SPD matrix, built once per broadcast and
// reused for every action's solve/inverse-norm inside the episode.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SymMatrix& a) : llt_(a.mat()) {
    if (llt_.info() != Eigen::Success) {
      throw NotPositiveDefinite("Cholesky failed: matrix is not positive definite");
    }
  }

  Vector solve(const Vector& b) const { return llt_.solve(b); }

  // sqrt(x^T A^{-1} x); tiny negative round-off is clamped to zero.
  double inv_norm(const Vector& x) const {
    const double q = x.dot(llt_.solve(x));
    return std::sqrt(q < 0.0 ? 0.0 : q);
  }

 private:
  Eigen::LLT<Matrix> llt_;
};

inline Vector spd_solve(const SymMatrix& a, const Vector& b) {
  return CholeskyFactor(a).solve(b);
}

inline double inv_norm(const SymMatrix& a, const Vector& x) {
  return CholeskyFactor(a).inv_norm(x);
}

inline Vector symmetric_eigenvalues(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const SymMatrix& a) {
  return symmetric_eigenvalues(a).minCoeff();
}

// Spectral norm of a symmetric matrix: max |eigenvalue|.
inline double spectral_norm(const SymMatrix& a) {
  const Vector ev = symmetric_eigenvalues(a);
  return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
}

}  // namespace byzbandit
