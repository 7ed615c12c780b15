#include "astm/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "astm/errors.hpp"

namespace astm {

Vector random_point(const FeasibleSet& q, std::size_t dim, SplitMix64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dim);
  Vector x(n);
  switch (q.kind) {
    case FeasibleSet::Kind::All:
      for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
      return x;
    case FeasibleSet::Kind::Box:
      for (Eigen::Index i = 0; i < n; ++i) x[i] = q.lo[i] + unif(rng) * (q.hi[i] - q.lo[i]);
      return x;
    case FeasibleSet::Kind::Ball: {
      for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
      double nrm = x.norm();
      if (nrm == 0.0) {
        x.setZero();
        x[0] = 1.0;
        nrm = 1.0;
      }
      const double r = q.radius * std::pow(unif(rng), 1.0 / static_cast<double>(n));
      return q.center + (r / nrm) * x;
    }
    case FeasibleSet::Kind::Simplex: {
      std::exponential_distribution<double> expo(1.0);
      for (Eigen::Index i = 0; i < n; ++i) x[i] = std::max(expo(rng), kEntropyFloor);
      return x / x.sum();
    }
  }
  throw ConfigError("unknown feasible set");
}

nlohmann::json OracleConditionReport::to_json() const {
  return {{"unbiased", {{"max_abs_z", max_abs_z}, {"pass", unbiased_ok}}},
          {"subgaussian_moment", {{"worst_moment", st2_moment}, {"limit", st2_limit}, {"pass", st2_ok}}},
          {"sandwich",
           {{"lower_min", sandwich_lower_min},
            {"upper_slack_min", sandwich_upper_slack},
            {"pass", sandwich_ok}}}};
}

OracleConditionReport check_oracle_conditions(const StochasticOracle& oracle, const Geometry& g,
                                              const FeasibleSet& q, const OracleSpec& spec,
                                              const OracleCheckOptions& opts) {
  spec.validate();
  if (opts.draws < 2 || opts.points == 0) throw ConfigError("oracle check needs >= 2 draws");
  const std::size_t dim = oracle.dim();
  OracleConditionReport rep;
  rep.st2_limit = std::exp(1.0) * (1.0 + opts.moment_slack);
  rep.unbiased_ok = true;
  rep.st2_ok = true;

  for (std::size_t p = 0; p < opts.points; ++p) {
    auto point_rng = substream(opts.seed, {0xA1, p});
    const Vector y = random_point(q, dim, point_rng);
    const Vector exact = oracle.exact_gradient(y);
    Vector sum = Vector::Zero(exact.size());
    Vector sumsq = Vector::Zero(exact.size());
    double moment = 0.0;
    bool any_noise = false;
    for (std::size_t d = 0; d < opts.draws; ++d) {
      auto rng = substream(opts.seed, {0xA2, p, d});
      const Vector dev = oracle.sample_gradient(y, rng) - exact;
      sum += dev;
      sumsq += dev.cwiseAbs2();
      const double dn = dual_norm(g, dev);
      if (dn != 0.0) any_noise = true;
      if (spec.sigma > 0.0) moment += std::exp(dn * dn / (spec.sigma * spec.sigma));
    }
    const double n = static_cast<double>(opts.draws);
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
      const double mean = sum[i] / n;
      const double var = std::max(0.0, (sumsq[i] - n * mean * mean) / (n - 1.0));
      const double se = std::sqrt(var / n);
      double z = 0.0;
      if (se > 0.0) {
        z = std::abs(mean) / se;
      } else if (std::abs(mean) > 1e-12 * (1.0 + std::abs(exact[i]))) {
        z = std::numeric_limits<double>::infinity();
      }
      rep.max_abs_z = std::max(rep.max_abs_z, z);
    }
    if (spec.sigma > 0.0) {
      rep.st2_moment = std::max(rep.st2_moment, moment / n);
    } else {
      // σ = 0 admits only noiseless oracles
      rep.st2_moment = std::max(rep.st2_moment, any_noise ? std::numeric_limits<double>::infinity() : 1.0);
    }
  }
  rep.unbiased_ok = rep.max_abs_z < opts.z_limit;
  rep.st2_ok = rep.st2_moment <= rep.st2_limit;

  rep.sandwich_lower_min = std::numeric_limits<double>::infinity();
  rep.sandwich_upper_slack = std::numeric_limits<double>::infinity();
  rep.sandwich_ok = true;
  for (std::size_t k = 0; k < opts.pairs; ++k) {
    auto rng = substream(opts.seed, {0xA3, k});
    const Vector x = random_point(q, dim, rng);
    const Vector y = random_point(q, dim, rng);
    const double fx = oracle.true_value(x);
    const double gap = fx - oracle.value(y) - oracle.exact_gradient(y).dot(x - y);
    const double nd = norm(g, x - y);
    const double upper = 0.5 * spec.lipschitz * nd * nd + spec.delta;
    const double tol = opts.sandwich_tol * (1.0 + std::abs(fx));
    rep.sandwich_lower_min = std::min(rep.sandwich_lower_min, gap);
    rep.sandwich_upper_slack = std::min(rep.sandwich_upper_slack, upper - gap);
    if (gap < -tol || gap > upper + tol) rep.sandwich_ok = false;
  }
  return rep;
}

std::vector<ProxCase> standard_prox_cases() {
  using S = FeasibleSet::Kind;
  using H = CompositeTerm::Kind;
  return {
      {"euclidean/all/zero", false, S::All, H::Zero},
      {"euclidean/all/l1", false, S::All, H::L1},
      {"euclidean/box/zero", false, S::Box, H::Zero},
      {"euclidean/ball/zero", false, S::Ball, H::Zero},
      {"entropy/simplex/zero", true, S::Simplex, H::Zero},
  };
}

namespace {

FeasibleSet random_set(FeasibleSet::Kind kind, std::size_t dim, SplitMix64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(dim);
  switch (kind) {
    case FeasibleSet::Kind::All:
      return FeasibleSet::all();
    case FeasibleSet::Kind::Box: {
      Vector lo(n), hi(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        lo[i] = -2.0 * unif(rng);
        hi[i] = lo[i] + 0.1 + 3.0 * unif(rng);
      }
      return FeasibleSet::box(lo, hi);
    }
    case FeasibleSet::Kind::Ball: {
      Vector c(n);
      for (Eigen::Index i = 0; i < n; ++i) c[i] = normal(rng);
      return FeasibleSet::ball(c, 0.2 + 1.8 * unif(rng));
    }
    case FeasibleSet::Kind::Simplex:
      return FeasibleSet::simplex();
  }
  throw ConfigError("unknown feasible set");
}

}  // namespace

SuiteResult three_point_suite(const ProxCase& c, std::size_t instances, std::uint64_t seed) {
  SuiteResult res;
  res.name = c.name;
  res.instances = instances;
  res.worst = std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<std::size_t> pick_dim(1, 6);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  for (std::size_t t = 0; t < instances; ++t) {
    auto rng = substream(seed, {0xB1, t});
    const std::size_t dim = pick_dim(rng);
    const Geometry g = c.entropy ? Geometry::entropy(dim) : Geometry::euclidean(dim);
    const FeasibleSet q = random_set(c.set, dim, rng);
    const CompositeTerm h =
        c.composite == CompositeTerm::Kind::L1 ? CompositeTerm::l1(2.0 * unif(rng)) : CompositeTerm::zero();
    const Vector z = random_point(q, dim, rng);
    const double alpha = std::exp(std::log(1e-2) + unif(rng) * std::log(1e3));
    Vector gt(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < gt.size(); ++i) gt[i] = 3.0 * normal(rng);
    const Vector y = prox_subproblem(g, q, h, z, alpha, gt);
    Vector probe = random_point(q, dim, rng);
    if (c.set == FeasibleSet::Kind::All) probe = y + 2.0 * probe;
    const auto r = three_point_check(g, q, h, z, alpha, gt, y, probe);
    res.worst = std::min(res.worst, r.residual / (1.0 + r.scale));
    if (!r.holds()) ++res.failures;
  }
  return res;
}

SuiteResult bregman_lower_bound_suite(bool entropy, std::size_t pairs, std::uint64_t seed) {
  SuiteResult res;
  res.name = entropy ? "entropy" : "euclidean";
  res.instances = pairs;
  res.worst = std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<std::size_t> pick_dim(1, 8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  for (std::size_t t = 0; t < pairs; ++t) {
    auto rng = substream(seed, {0xC1, t});
    const std::size_t dim = pick_dim(rng);
    const Geometry g = entropy ? Geometry::entropy(dim) : Geometry::euclidean(dim);
    Vector x(static_cast<Eigen::Index>(dim)), y(static_cast<Eigen::Index>(dim));
    if (entropy) {
      // sharpen some pairs toward the boundary of the simplex
      const double power = 1.0 + 6.0 * unif(rng);
      const FeasibleSet s = FeasibleSet::simplex();
      x = random_point(s, dim, rng).array().pow(power);
      y = random_point(s, dim, rng).array().pow(power);
      x = x.cwiseMax(kEntropyFloor);
      y = y.cwiseMax(kEntropyFloor);
      x /= x.sum();
      y /= y.sum();
    } else {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = 3.0 * normal(rng);
        y[i] = 3.0 * normal(rng);
      }
    }
    const double nd = norm(g, x - y);
    const double margin = bregman(g, x, y) - 0.5 * nd * nd;
    res.worst = std::min(res.worst, margin);
    if (margin < -1e-9) ++res.failures;
  }
  return res;
}

}  // namespace astm
