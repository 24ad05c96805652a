#pragma once

#include "lrpr/types.hpp"

namespace lrpr {

template <typename Scalar>
struct ThinQr {
  Matrix<Scalar> q;  // same rows as input, orthonormal columns
  Matrix<Scalar> r;  // square upper triangular, diagonal real and >= 0
};

// Thin Householder QR normalized so diag(R) is real and non-negative, which
// makes the factorization unique for full-rank input. Zero diagonal entries
// are left untouched (phase convention 1).
template <typename Scalar>
ThinQr<Scalar> thin_qr(const Matrix<Scalar>& a) {
  const Index n = a.rows();
  const Index r = a.cols();
  if (n < r) throw DimensionError("thin_qr: input has fewer rows than columns");
  Eigen::HouseholderQR<Matrix<Scalar>> qr(a);
  ThinQr<Scalar> out;
  out.q = qr.householderQ() * Matrix<Scalar>::Identity(n, r);
  out.r = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  for (Index i = 0; i < r; ++i) {
    const Scalar p = phase(out.r(i, i));
    out.q.col(i) *= p;
    out.r.row(i) *= Eigen::numext::conj(p);
    out.r(i, i) = Scalar(Eigen::numext::real(out.r(i, i)));  // kill rounding dust
  }
  return out;
}

// Relative magnitude of the smallest diagonal entry of R; a cheap full-rank
// witness for the matrices QR-ed in this codebase.
template <typename Scalar>
double qr_diag_collapse(const ThinQr<Scalar>& f) {
  double mn = std::numeric_limits<double>::infinity();
  double mx = 0.0;
  for (Index i = 0; i < f.r.rows(); ++i) {
    const double d = std::abs(f.r(i, i));
    mn = std::min(mn, d);
    mx = std::max(mx, d);
  }
  if (mx == 0.0) return 0.0;
  return mn / mx;
}

}  // namespace lrpr
