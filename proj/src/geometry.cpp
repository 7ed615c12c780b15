#include "astm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "astm/errors.hpp"

namespace astm {

namespace {

void require_dim(const Geometry& g, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != g.dim()) {
    throw DomainError("dimension mismatch: expected " + std::to_string(g.dim()) +
                      ", got " + std::to_string(x.size()));
  }
}

}  // namespace

Geometry::Geometry(std::size_t dim, Norm norm, ProxFunction prox)
    : dim_(dim), norm_(norm), prox_(prox) {
  if (dim == 0) throw ConfigError("geometry dimension must be >= 1");
}

Geometry Geometry::euclidean(std::size_t dim) {
  return Geometry(dim, Norm::L2, ProxFunction::EuclideanHalfSq);
}

Geometry Geometry::entropy(std::size_t dim) {
  return Geometry(dim, Norm::L1, ProxFunction::NegEntropy);
}

std::string Geometry::name() const {
  return is_entropy() ? "entropy" : "euclidean";
}

double norm(const Geometry& g, const Vector& x) {
  require_dim(g, x);
  return g.norm() == Norm::L2 ? x.norm() : x.lpNorm<1>();
}

double dual_norm(const Geometry& g, const Vector& lambda) {
  require_dim(g, lambda);
  if (g.norm() == Norm::L2) return lambda.norm();
  return lambda.size() == 0 ? 0.0 : lambda.lpNorm<Eigen::Infinity>();
}

BregmanValue bregman_checked(const Geometry& g, const Vector& x, const Vector& y) {
  require_dim(g, x);
  require_dim(g, y);
  BregmanValue out;
  if (!g.is_entropy()) {
    out.value = 0.5 * (x - y).squaredNorm();
    return out;
  }

  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double xi = x[i];
    double yi = y[i];
    if (!(yi > 0.0)) throw DomainError("bregman: y has a non-positive coordinate");
    if (xi < 0.0) throw DomainError("bregman: x has a negative coordinate");
    if (yi < kEntropyFloor) {
      yi = kEntropyFloor;
      out.clamped = true;
    }
    // 0 · ln 0 = 0
    if (xi > 0.0) {
      if (xi < kEntropyFloor) {
        xi = kEntropyFloor;
        out.clamped = true;
      }
      acc += xi * (std::log(xi) - std::log(yi));
    }
    acc += yi - xi;
  }
  out.value = std::max(acc, 0.0);
  return out;
}

double regularity_constant(const Geometry& g) {
  if (g.norm() == Norm::L2) return 1.0;
  // q = ∞, so min[q − 1, 2 ln n] = 2 ln n; clamp to 1 for tiny n.
  return std::max(1.0, 2.0 * std::log(static_cast<double>(g.dim())));
}

void require_point(const Geometry& g, const Vector& x, const char* what) {
  require_dim(g, x);
  if (!x.allFinite()) throw DomainError(std::string(what) + " has non-finite entries");
  if (g.is_entropy()) {
    if ((x.array() <= 0.0).any()) {
      throw DomainError(std::string(what) + " must be strictly positive on the simplex");
    }
    if (std::abs(x.sum() - 1.0) > kSimplexSumTol) {
      throw DomainError(std::string(what) + " does not sum to 1");
    }
  }
}

}  // namespace astm
