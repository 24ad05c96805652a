#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace lrpr {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Field { Real, Complex };

template <typename Scalar>
inline constexpr bool is_complex_v =
    !std::is_same_v<Scalar, typename Eigen::NumTraits<Scalar>::Real>;

template <typename Scalar>
constexpr Field field_of() {
  return is_complex_v<Scalar> ? Field::Complex : Field::Real;
}

inline const char* field_name(Field f) {
  return f == Field::Real ? "real" : "complex";
}

// phase(z) = z/|z| with the convention phase(0) = 1; reduces to sign() on the
// reals with sign(0) = 1.
inline double phase(double z) { return z < 0.0 ? -1.0 : 1.0; }
inline std::complex<double> phase(const std::complex<double>& z) {
  const double a = std::abs(z);
  if (a == 0.0) return {1.0, 0.0};
  return z / a;
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape of an argument is inconsistent with the others or with the model.
struct DimensionError : Error { using Error::Error; };
// A scalar/config parameter is outside its documented domain.
struct ParameterError : Error { using Error::Error; };
// A structured input fails a documented precondition (orthonormality, ...).
struct ValidationError : Error { using Error::Error; };
// Partition or column index out of range.
struct IndexError : Error { using Error::Error; };
// Operation is only defined for the other scalar field.
struct UnsupportedFieldError : Error { using Error::Error; };
// Numerically rank-deficient system where full rank is required.
struct ConditioningError : Error { using Error::Error; };
// A factor lost rank mid-run (QR step found a zero diagonal).
struct RankCollapseError : Error { using Error::Error; };
// Threshold rank selection found no eigenvalue gap above omega.
struct NoRankDetectedError : Error { using Error::Error; };
// Data degenerate to the point where the estimator is undefined.
struct DegenerateDataError : Error { using Error::Error; };
// Fewer measurements than unknowns in a per-column solve.
struct UnderdeterminedError : Error { using Error::Error; };

// Frobenius defect of U^H U from the identity; 0 for orthonormal columns.
template <typename Derived>
double orthonormality_defect(const Eigen::MatrixBase<Derived>& u) {
  using S = typename Derived::Scalar;
  const Matrix<S> g = u.adjoint() * u;
  return (g - Matrix<S>::Identity(u.cols(), u.cols())).norm();
}

}  // namespace lrpr
