#include "astm/proxstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "astm/errors.hpp"

namespace astm {

CompositeTerm CompositeTerm::l1(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("l1 weight must be >= 0");
  return {Kind::L1, lambda};
}

double CompositeTerm::value(const Vector& x) const {
  return kind == Kind::L1 ? lambda * x.lpNorm<1>() : 0.0;
}

std::string CompositeTerm::name() const { return kind == Kind::L1 ? "l1" : "zero"; }

FeasibleSet FeasibleSet::box(Vector lo, Vector hi) {
  if (lo.size() != hi.size() || lo.size() == 0) throw ConfigError("box bounds must match");
  if ((lo.array() > hi.array()).any()) throw ConfigError("box requires lo <= hi");
  if (!lo.allFinite() || !hi.allFinite()) throw ConfigError("box bounds must be finite");
  return {Kind::Box, std::move(lo), std::move(hi), {}, 0.0};
}

FeasibleSet FeasibleSet::ball(Vector center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be > 0");
  if (!center.allFinite()) throw ConfigError("ball center must be finite");
  return {Kind::Ball, {}, {}, std::move(center), radius};
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  if (!x.allFinite()) return false;
  switch (kind) {
    case Kind::All:
      return true;
    case Kind::Box:
      return x.size() == lo.size() && (x.array() >= lo.array() - tol).all() &&
             (x.array() <= hi.array() + tol).all();
    case Kind::Ball:
      return x.size() == center.size() && (x - center).norm() <= radius + tol;
    case Kind::Simplex:
      return (x.array() >= -tol).all() && std::abs(x.sum() - 1.0) <= tol;
  }
  return false;
}

std::string FeasibleSet::name() const {
  switch (kind) {
    case Kind::All: return "all";
    case Kind::Box: return "box";
    case Kind::Ball: return "ball";
    case Kind::Simplex: return "simplex";
  }
  return "?";
}

void require_supported(const Geometry& g, const FeasibleSet& q, const CompositeTerm& h) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  if (q.kind == FeasibleSet::Kind::Box && q.lo.size() != n) {
    throw ConfigError("box dimension does not match geometry");
  }
  if (q.kind == FeasibleSet::Kind::Ball && q.center.size() != n) {
    throw ConfigError("ball dimension does not match geometry");
  }
  if (g.is_entropy()) {
    if (q.kind != FeasibleSet::Kind::Simplex) {
      throw ConfigError("entropy geometry requires the simplex as feasible set");
    }
    if (h.kind != CompositeTerm::Kind::Zero) {
      throw ConfigError("no closed-form prox for a composite term on the simplex");
    }
    return;
  }
  if (q.kind == FeasibleSet::Kind::Simplex) {
    throw ConfigError("simplex feasible set requires the entropy geometry");
  }
  if (q.kind == FeasibleSet::Kind::Ball && h.kind != CompositeTerm::Kind::Zero) {
    throw ConfigError("no closed-form prox for a composite term on a ball");
  }
}

Vector soft_threshold(const Vector& v, double t) {
  return v.unaryExpr([t](double a) {
    const double m = std::abs(a) - t;
    return m > 0.0 ? std::copysign(m, a) : 0.0;
  });
}

Vector prox_subproblem(const Geometry& g, const FeasibleSet& q, const CompositeTerm& h,
                       const Vector& u, double alpha, const Vector& gtilde) {
  require_supported(g, q, h);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("prox step alpha must be > 0");
  require_point(g, u, "prox center");
  if (static_cast<std::size_t>(gtilde.size()) != g.dim() || !gtilde.allFinite()) {
    throw DomainError("prox gradient has wrong dimension or non-finite entries");
  }

  if (g.is_entropy()) {
    // u_i exp(−α g_i), normalized with a max shift
    Vector w = u.array().log() - alpha * gtilde.array();
    w.array() -= w.maxCoeff();
    w = w.array().exp().cwiseMax(kEntropyFloor);
    return w / w.sum();
  }

  Vector v = u - alpha * gtilde;
  if (h.kind == CompositeTerm::Kind::L1) v = soft_threshold(v, alpha * h.lambda);
  switch (q.kind) {
    case FeasibleSet::Kind::All:
      return v;
    case FeasibleSet::Kind::Box:
      return v.cwiseMax(q.lo).cwiseMin(q.hi);
    case FeasibleSet::Kind::Ball: {
      const double d = (v - q.center).norm();
      if (d <= q.radius) return v;
      return q.center + (q.radius / d) * (v - q.center);
    }
    case FeasibleSet::Kind::Simplex:
      break;
  }
  throw ConfigError("unsupported prox configuration");
}

ThreePointResidual three_point_check(const Geometry& g, const FeasibleSet& q,
                                     const CompositeTerm& h, const Vector& z, double alpha,
                                     const Vector& gtilde, const Vector& y, const Vector& x_probe) {
  if (!q.contains(x_probe)) throw DomainError("three-point probe lies outside the feasible set");
  auto psi = [&](const Vector& x) { return alpha * (gtilde.dot(x) + h.value(x)); };
  const double psi_x = psi(x_probe);
  const double psi_y = psi(y);
  const double v_xz = bregman(g, x_probe, z);
  const double v_yz = bregman(g, y, z);
  const double v_xy = bregman(g, x_probe, y);
  ThreePointResidual r;
  r.residual = (psi_x + v_xz) - (psi_y + v_yz + v_xy);
  r.scale = std::abs(psi_x) + v_xz + std::abs(psi_y) + v_yz + v_xy;
  return r;
}

double domain_diameter(const Geometry& g, const FeasibleSet& q) {
  switch (q.kind) {
    case FeasibleSet::Kind::All:
      return std::numeric_limits<double>::infinity();
    case FeasibleSet::Kind::Box:
      return norm(g, q.hi - q.lo);
    case FeasibleSet::Kind::Ball:
      // ℓ1 diameter of a Euclidean ball is 2r√n
      return g.norm() == Norm::L2 ? 2.0 * q.radius
                                  : 2.0 * q.radius * std::sqrt(static_cast<double>(g.dim()));
    case FeasibleSet::Kind::Simplex:
      // ℓ2 diameter is √2
      return g.norm() == Norm::L1 ? 2.0 : std::sqrt(2.0);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace astm
