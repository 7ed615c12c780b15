#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>

namespace astm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Norm { L2, L1 };
enum class ProxFunction { EuclideanHalfSq, NegEntropy };

/// Primal norm, its dual, and the matching distance-generating function.
///
/// Only two pairings are valid: (L2, ½‖x‖²) on subsets of ℝⁿ and
/// (L1, Σ xᵢ ln xᵢ) on the probability simplex. Use the named constructors.
class Geometry {
 public:
  static Geometry euclidean(std::size_t dim);
  static Geometry entropy(std::size_t dim);

  std::size_t dim() const { return dim_; }
  Norm norm() const { return norm_; }
  ProxFunction prox() const { return prox_; }
  bool is_entropy() const { return prox_ == ProxFunction::NegEntropy; }

  std::string name() const;

  friend bool operator==(const Geometry&, const Geometry&) = default;

 private:
  Geometry(std::size_t dim, Norm norm, ProxFunction prox);

  std::size_t dim_;
  Norm norm_;
  ProxFunction prox_;
};

/// Coordinates below this are raised to it before taking logarithms.
inline constexpr double kEntropyFloor = 1e-300;

/// Tolerance on Σxᵢ = 1 for simplex points.
inline constexpr double kSimplexSumTol = 1e-12;

double norm(const Geometry& g, const Vector& x);
double dual_norm(const Geometry& g, const Vector& lambda);

struct BregmanValue {
  double value = 0.0;
  /// Set when a positive coordinate below kEntropyFloor had to be raised.
  bool clamped = false;
};

/// V(x, y) = d(x) − d(y) − ⟨∇d(y), x − y⟩.
///
/// Euclidean: ½‖x − y‖². Entropy: Σ xᵢ ln(xᵢ/yᵢ) − Σxᵢ + Σyᵢ, which is the
/// KL divergence on the simplex. Throws DomainError if y has a non-positive
/// coordinate or x a negative one (entropy only).
BregmanValue bregman_checked(const Geometry& g, const Vector& x, const Vector& y);

inline double bregman(const Geometry& g, const Vector& x, const Vector& y) {
  return bregman_checked(g, x, y).value;
}

/// Regularity constant κ of (ℝⁿ, ‖·‖_*): 1 for the Euclidean dual norm and
/// max(1, 2 ln n) for the ℓ∞ dual of ℓ1.
double regularity_constant(const Geometry& g);

/// Throws DomainError unless x has g.dim() finite entries, and for the
/// entropy geometry lies in the relative interior of the simplex.
void require_point(const Geometry& g, const Vector& x, const char* what = "point");

}  // namespace astm
