#pragma once

#include "astm/geometry.hpp"

namespace astm {

/// The simple convex term h in F = f + h.
struct CompositeTerm {
  enum class Kind { Zero, L1 };

  Kind kind = Kind::Zero;
  double lambda = 0.0;

  static CompositeTerm zero() { return {}; }
  static CompositeTerm l1(double lambda);

  double value(const Vector& x) const;
  std::string name() const;
};

/// Closed convex feasible set Q.
struct FeasibleSet {
  enum class Kind { All, Box, Ball, Simplex };

  Kind kind = Kind::All;
  Vector lo, hi;   // Box
  Vector center;   // Ball
  double radius = 0.0;

  static FeasibleSet all() { return {}; }
  static FeasibleSet box(Vector lo, Vector hi);
  static FeasibleSet ball(Vector center, double radius);
  static FeasibleSet simplex() { return {Kind::Simplex, {}, {}, {}, 0.0}; }

  /// Membership up to an absolute tolerance.
  bool contains(const Vector& x, double tol = 1e-9) const;
  std::string name() const;
};

/// Throws ConfigError unless (g, Q, h) is one of the closed-form prox cases:
/// Euclidean with All/Box/Ball (L1 composite on All and Box only), or
/// entropy on the simplex with h = 0. Also checks dimensions of Q's data.
void require_supported(const Geometry& g, const FeasibleSet& q, const CompositeTerm& h);

/// argmin_{x ∈ Q} V(x, u) + α⟨gtilde, x⟩ + α·h(x), in closed form.
Vector prox_subproblem(const Geometry& g, const FeasibleSet& q, const CompositeTerm& h,
                       const Vector& u, double alpha, const Vector& gtilde);

struct ThreePointResidual {
  double residual = 0.0;
  double scale = 0.0;  // sum of magnitudes of the terms

  bool holds(double rel_tol = 1e-9) const { return residual >= -rel_tol * (1.0 + scale); }
};

/// [ψ(x) + V(x, z)] − [ψ(y) + V(y, z) + V(x, y)] with ψ = α(⟨gtilde, ·⟩ + h),
/// where y is the prox output for (z, α, gtilde). Non-negative for exact y.
ThreePointResidual three_point_check(const Geometry& g, const FeasibleSet& q,
                                     const CompositeTerm& h, const Vector& z, double alpha,
                                     const Vector& gtilde, const Vector& y, const Vector& x_probe);

/// Upper bound on max_{x,y ∈ Q} ‖x − y‖; +infinity for Q = All.
double domain_diameter(const Geometry& g, const FeasibleSet& q);

/// Soft-thresholding, coordinatewise sign(v)·max(|v| − t, 0).
Vector soft_threshold(const Vector& v, double t);

}  // namespace astm
