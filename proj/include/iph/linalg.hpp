#pragma once

// Dense small-matrix kernel: matrix exponential (Pade 13, scaling and
// squaring), the Van Loan convolution integral, and analytic matrix
// functions by eigendecomposition with a contour-integral fallback.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "iph/errors.hpp"

namespace iph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

namespace linalg {

inline void require_finite(const Matrix& A, const char* what) {
  if (A.size() == 0) throw InputError(std::string(what) + ": empty matrix");
  if (!A.allFinite()) throw InputError(std::string(what) + ": non-finite entries");
}

inline void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols()) throw InputError(std::string(what) + ": matrix is not square");
}

namespace detail {

// Degree-13 Pade coefficients and the 1-norm bound below which the
// approximant is accurate to unit roundoff.
inline constexpr double pade13[14] = {64764752532480000.0,
                                      32382376266240000.0,
                                      7771770303897600.0,
                                      1187353796428800.0,
                                      129060195264000.0,
                                      10559470521600.0,
                                      670442572800.0,
                                      33522128640.0,
                                      1323241920.0,
                                      40840800.0,
                                      960960.0,
                                      16380.0,
                                      182.0,
                                      1.0};
inline constexpr double pade13_theta = 5.371920351148152;

inline int squaring_count(const Matrix& A) {
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
  if (norm <= pade13_theta) return 0;
  return static_cast<int>(std::ceil(std::log2(norm / pade13_theta)));
}

inline Matrix pade13_approximant(const Matrix& A) {
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const double* b = pade13;
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  Matrix inner_u = b[13] * A6 + b[11] * A4 + b[9] * A2;
  Matrix U = A * (A6 * inner_u + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  Matrix inner_v = b[12] * A6 + b[10] * A4 + b[8] * A2;
  Matrix V = A6 * inner_v + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  return (V - U).partialPivLu().solve(V + U);
}

}  // namespace detail

/// e^A by scaling and squaring with a fixed degree-13 Pade approximant.
inline Matrix mexp(const Matrix& A) {
  require_finite(A, "mexp");
  require_square(A, "mexp");
  const int s = detail::squaring_count(A);
  Matrix R = detail::pade13_approximant(A / std::ldexp(1.0, s));
  for (int i = 0; i < s; ++i) R = R * R;
  return R;
}

/// e^A = matrix * exp(log_scale), for exponents whose entries underflow.
struct ScaledMatrix {
  Matrix matrix;
  double log_scale = 0.0;
};

/// Same algorithm as mexp, renormalising after every squaring so that the
/// result keeps full relative precision when e^A underflows double range.
inline ScaledMatrix mexp_scaled(const Matrix& A) {
  require_finite(A, "mexp_scaled");
  require_square(A, "mexp_scaled");
  const int s = detail::squaring_count(A);
  ScaledMatrix out{detail::pade13_approximant(A / std::ldexp(1.0, s)), 0.0};
  for (int i = 0; i < s; ++i) {
    out.matrix = out.matrix * out.matrix;
    out.log_scale *= 2.0;
    const double m = out.matrix.cwiseAbs().maxCoeff();
    if (m > 0.0 && std::isfinite(m)) {
      out.matrix /= m;
      out.log_scale += std::log(m);
    }
  }
  return out;
}

/// J(z) = int_0^z e^{T(z-u)} B e^{Tu} du, read off the upper-right block of
/// exp([[T, B], [0, T]] z).
inline Matrix conv_integral(const Matrix& T, const Matrix& B, double z) {
  require_square(T, "conv_integral");
  if (B.rows() != T.rows() || B.cols() != T.cols())
    throw InputError("conv_integral: T and B differ in order");
  if (!(z >= 0.0)) throw InputError("conv_integral: z must be non-negative");
  const auto p = T.rows();
  Matrix block = Matrix::Zero(2 * p, 2 * p);
  block.topLeftCorner(p, p) = T * z;
  block.topRightCorner(p, p) = B * z;
  block.bottomRightCorner(p, p) = T * z;
  return mexp(block).topRightCorner(p, p);
}

/// Both e^{Tz} and J(z) from one block exponential.
struct ExpAndIntegral {
  Matrix exp;
  Matrix integral;
};

inline ExpAndIntegral exp_and_conv_integral(const Matrix& T, const Matrix& B, double z) {
  const auto p = T.rows();
  Matrix block = Matrix::Zero(2 * p, 2 * p);
  block.topLeftCorner(p, p) = T * z;
  block.topRightCorner(p, p) = B * z;
  block.bottomRightCorner(p, p) = T * z;
  Matrix E = mexp(block);
  return {E.topLeftCorner(p, p), E.topRightCorner(p, p)};
}

// ---------------------------------------------------------------------------
// Scalar special functions

namespace detail {

inline constexpr double euler_gamma = 0.57721566490153286060651209;

// E1 by its convergent power series; accurate for moderate |z|.
inline Complex e1_series(Complex z) {
  Complex term = 1.0;
  Complex sum = 0.0;
  for (int k = 1; k < 500; ++k) {
    term *= -z / static_cast<double>(k);
    const Complex add = term / static_cast<double>(k);
    sum += add;
    if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
  }
  return -euler_gamma - std::log(z) - sum;
}

// e^z E1(z) by modified Lentz evaluation of the continued fraction.
inline Complex exp_e1_continued_fraction(Complex z) {
  constexpr double tiny = 1e-300;
  Complex b = z + 1.0;
  Complex c = 1.0 / tiny;
  Complex d = 1.0 / b;
  Complex h = d;
  for (int i = 1; i < 20000; ++i) {
    const double an = -static_cast<double>(i) * static_cast<double>(i);
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const Complex del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) return h;
  }
  throw NumericalError("exponential integral: continued fraction did not converge");
}

inline bool on_negative_real_axis(Complex z) {
  return z.real() <= 0.0 && std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z));
}

}  // namespace detail

/// Exponential integral E1(z) = int_1^inf e^{-uz}/u du (principal branch).
inline Complex expint_e1(Complex z) {
  if (z == Complex(0.0)) throw DomainError("expint_e1: singular at zero");
  if (std::abs(z) <= 4.0 || z.real() <= 0.0) return detail::e1_series(z);
  return std::exp(-z) * detail::exp_e1_continued_fraction(z);
}

/// e^z E1(z); stays finite where the two factors separately overflow.
inline Complex exp_expint_e1(Complex z) {
  if (z == Complex(0.0)) throw DomainError("exp_expint_e1: singular at zero");
  if (std::abs(z) <= 4.0 || z.real() <= 0.0) return std::exp(z) * detail::e1_series(z);
  return detail::exp_e1_continued_fraction(z);
}

inline double expint_e1(double x) { return expint_e1(Complex(x, 0.0)).real(); }

// ---------------------------------------------------------------------------
// Matrix functions

enum class FunctionKind {
  inverse,           // 1/w
  power,             // w^a, principal branch
  exp,               // e^w
  expint_e1,         // E1(w)
  exp_expint_e1,     // e^w E1(w)
  gompertz_laplace,  // Laplace transform of g(s) = log(beta s + 1)/beta at w
};

struct ScalarFunction {
  FunctionKind kind = FunctionKind::exp;
  double param = 0.0;  // exponent for power, beta for gompertz_laplace

  static ScalarFunction inverse() { return {FunctionKind::inverse, 0.0}; }
  static ScalarFunction power(double a) { return {FunctionKind::power, a}; }
  static ScalarFunction exponential() { return {FunctionKind::exp, 0.0}; }
  static ScalarFunction e1() { return {FunctionKind::expint_e1, 0.0}; }
  static ScalarFunction exp_e1() { return {FunctionKind::exp_expint_e1, 0.0}; }
  static ScalarFunction gompertz_laplace(double beta) {
    return {FunctionKind::gompertz_laplace, beta};
  }

  /// True when the function has a singularity or branch cut on (-inf, 0].
  bool cut_on_negative_axis() const {
    return kind == FunctionKind::power || kind == FunctionKind::expint_e1 ||
           kind == FunctionKind::exp_expint_e1 || kind == FunctionKind::gompertz_laplace;
  }

  bool analytic_at(Complex w) const {
    switch (kind) {
      case FunctionKind::exp:
        return true;
      case FunctionKind::inverse:
        return std::abs(w) > 0.0;
      default:
        return !detail::on_negative_real_axis(w);
    }
  }

  Complex operator()(Complex w) const {
    switch (kind) {
      case FunctionKind::inverse:
        return 1.0 / w;
      case FunctionKind::power:
        return std::pow(w, param);
      case FunctionKind::exp:
        return std::exp(w);
      case FunctionKind::expint_e1:
        return linalg::expint_e1(w);
      case FunctionKind::exp_expint_e1:
        return linalg::exp_expint_e1(w);
      case FunctionKind::gompertz_laplace: {
        // L_g(w) = e^{w/beta} E1(w/beta) / (beta w)
        const double beta = param;
        return linalg::exp_expint_e1(w / beta) / (beta * w);
      }
    }
    return {};
  }
};

inline constexpr double eigen_condition_limit = 1e8;
inline constexpr int contour_nodes = 512;
inline constexpr double imaginary_residue_limit = 1e-9;

namespace detail {

inline Matrix real_part_checked(const ComplexMatrix& R, const char* what) {
  const double scale = std::max(1.0, R.cwiseAbs().maxCoeff());
  if (R.imag().cwiseAbs().maxCoeff() > imaginary_residue_limit * scale)
    throw NumericalError(std::string(what) + ": imaginary residue exceeds tolerance");
  return R.real();
}

// Trapezoidal rule on an ellipse enclosing the spectrum:
// f(A) = (1/2 pi i) \oint f(w) (wI - A)^{-1} dw.
inline ComplexMatrix contour_function(const Matrix& A, const ComplexVector& spectrum,
                                      const ScalarFunction& f) {
  const auto n = A.rows();
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymax = 0.0;
  for (const auto& ev : spectrum) {
    xmin = std::min(xmin, ev.real());
    xmax = std::max(xmax, ev.real());
    ymax = std::max(ymax, std::abs(ev.imag()));
  }
  const double centre = 0.5 * (xmin + xmax);
  const double rx = 0.5 * (xmax - xmin);
  const double spread = std::max({rx, ymax, 1e-3 * std::max(1.0, std::abs(centre))});
  double margin = std::max(spread, 0.5);
  if (f.cut_on_negative_axis()) {
    if (xmin <= 0.0) throw DomainError("matrix_function: spectrum touches the branch cut");
    margin = std::min(margin, 0.5 * xmin);
  } else if (f.kind == FunctionKind::inverse) {
    // the pole at the origin has to stay outside the contour
    if (xmin > 0.0)
      margin = std::min(margin, 0.5 * xmin);
    else if (xmax < 0.0)
      margin = std::min(margin, -0.5 * xmax);
    else
      throw NumericalError("matrix_function: contour cannot exclude the pole at the origin");
  }
  // Real extent stays inside Re w > 0 for cut functions; the imaginary
  // semi-axis is free and is widened to at least a circle.
  const double a = rx + margin;
  const double b = std::max(ymax + margin, a);

  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  const ComplexMatrix Ac = A.cast<Complex>();
  const ComplexMatrix I = ComplexMatrix::Identity(n, n);
  for (int j = 0; j < contour_nodes; ++j) {
    const double theta = 2.0 * std::numbers::pi * (j + 0.5) / contour_nodes;
    const Complex w(centre + a * std::cos(theta), b * std::sin(theta));
    const Complex dw(-a * std::sin(theta), b * std::cos(theta));
    const ComplexMatrix resolvent = (w * I - Ac).partialPivLu().inverse();
    acc += (f(w) * dw) * resolvent;
  }
  return acc / (Complex(0.0, 1.0) * static_cast<double>(contour_nodes));
}

}  // namespace detail

/// f(A) for an analytic scalar function f. Uses V f(D) V^{-1} when the
/// eigenvector matrix is well conditioned, otherwise a contour integral.
inline Matrix matrix_function(const Matrix& A, const ScalarFunction& f) {
  require_finite(A, "matrix_function");
  require_square(A, "matrix_function");
  const auto n = A.rows();

  if (f.kind == FunctionKind::exp) return mexp(A);
  if (f.kind == FunctionKind::inverse) {
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) throw DomainError("matrix_function: inverse of a singular matrix");
    return lu.inverse();
  }

  Eigen::EigenSolver<Matrix> es(A, true);
  if (es.info() != Eigen::Success) throw NumericalError("matrix_function: eigensolver failed");
  const ComplexVector spectrum = es.eigenvalues();
  for (const auto& ev : spectrum)
    if (!f.analytic_at(ev)) throw DomainError("matrix_function: function singular on spectrum");

  const ComplexMatrix V = es.eigenvectors();
  Eigen::JacobiSVD<ComplexMatrix> svd(V);
  const auto& sv = svd.singularValues();
  const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();

  if (cond < eigen_condition_limit) {
    ComplexVector fd(n);
    for (Eigen::Index i = 0; i < n; ++i) fd(i) = f(spectrum(i));
    const ComplexMatrix R = V * fd.asDiagonal() * V.partialPivLu().inverse();
    return detail::real_part_checked(R, "matrix_function");
  }
  return detail::real_part_checked(detail::contour_function(A, spectrum, f), "matrix_function");
}

/// Contour-integral evaluation regardless of conditioning (exposed for tests).
inline Matrix matrix_function_contour(const Matrix& A, const ScalarFunction& f) {
  require_finite(A, "matrix_function_contour");
  require_square(A, "matrix_function_contour");
  Eigen::EigenSolver<Matrix> es(A, false);
  const ComplexVector spectrum = es.eigenvalues();
  for (const auto& ev : spectrum)
    if (!f.analytic_at(ev)) throw DomainError("matrix_function: function singular on spectrum");
  return detail::real_part_checked(detail::contour_function(A, spectrum, f),
                                   "matrix_function_contour");
}

}  // namespace linalg
}  // namespace iph
