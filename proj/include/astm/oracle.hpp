#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "astm/geometry.hpp"
#include "astm/rng.hpp"
#include "json.hpp"

namespace astm {

/// Constants of a stochastic (δ, L)-oracle. L is measured in the primal norm
/// of the geometry it was requested for; σ in the matching dual norm.
struct OracleSpec {
  double delta = 0.0;
  double lipschitz = 1.0;
  double sigma = 0.0;

  void validate() const;
};

struct OracleSample {
  double f_value = 0.0;  // f_δ(y), exact
  Vector grad_sample;    // one draw of ∇f_δ(y; ξ)
};

struct BatchGradient {
  Vector mean_grad;
  std::size_t batch_size = 0;
  std::size_t samples_drawn = 0;
};

/// Stochastic first-order oracle for the smooth part f.
///
/// Function values are exact; only gradients are sampled. Implementations are
/// immutable after construction, all randomness comes in through the engine.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string kind() const = 0;

  /// f_δ(y).
  virtual double value(const Vector& y) const = 0;
  /// The true f(y), for measuring optimality gaps. Never consumed by the solver.
  virtual double true_value(const Vector& y) const { return value(y); }
  /// ∇f_δ(y), for diagnostics.
  virtual Vector exact_gradient(const Vector& y) const = 0;
  /// One unbiased draw ∇f_δ(y; ξ).
  virtual Vector sample_gradient(const Vector& y, SplitMix64& rng) const = 0;

  virtual OracleSpec spec(const Geometry& g) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using OraclePtr = std::shared_ptr<const StochasticOracle>;

/// f = ½ yᵀΣy − bᵀy with gradient noise N(0, s²) i.i.d. per coordinate.
class NoisyQuadratic final : public StochasticOracle {
 public:
  NoisyQuadratic(Matrix sigma_mat, Vector b, double noise_std);

  /// Σ = U diag(λ) Uᵀ with λ evenly spaced over [lo, hi] and U a random
  /// orthogonal basis drawn from data_seed.
  static std::shared_ptr<NoisyQuadratic> with_spectrum(std::size_t dim, double lo, double hi,
                                                       Vector b, double noise_std,
                                                       std::uint64_t data_seed);

  std::size_t dim() const override { return static_cast<std::size_t>(b_.size()); }
  std::string kind() const override { return "noisy_quadratic"; }
  double value(const Vector& y) const override;
  Vector exact_gradient(const Vector& y) const override;
  Vector sample_gradient(const Vector& y, SplitMix64& rng) const override;
  OracleSpec spec(const Geometry& g) const override;
  nlohmann::json to_json() const override;

  const Matrix& hessian() const { return sigma_mat_; }
  const Vector& linear() const { return b_; }
  double noise_std() const { return noise_std_; }
  double min_eigenvalue() const { return eig_min_; }
  double max_eigenvalue() const { return eig_max_; }
  std::uint64_t data_seed() const { return data_seed_; }
  void set_data_seed(std::uint64_t seed) { data_seed_ = seed; }

 private:
  Matrix sigma_mat_;
  Vector b_;
  double noise_std_;
  double eig_min_ = 0.0;
  double eig_max_ = 0.0;
  std::uint64_t data_seed_ = 0;
};

/// f = (1/N) Σᵢ log(1 + exp(−lᵢ aᵢᵀy)); a gradient sample is the gradient of
/// one uniformly chosen term.
class FiniteSumLogistic final : public StochasticOracle {
 public:
  FiniteSumLogistic(Matrix data, Vector labels);

  /// Gaussian features scaled by 1/√dim, labels from a random separating
  /// direction with 10% flips.
  static std::shared_ptr<FiniteSumLogistic> random(std::size_t n_samples, std::size_t dim,
                                                   std::uint64_t data_seed);

  std::size_t dim() const override { return static_cast<std::size_t>(data_.cols()); }
  std::string kind() const override { return "logistic"; }
  double value(const Vector& y) const override;
  Vector exact_gradient(const Vector& y) const override;
  Vector sample_gradient(const Vector& y, SplitMix64& rng) const override;
  /// L from the Hessian bound (1/4N) Σ aᵢaᵢᵀ; σ = 2·maxᵢ‖aᵢ‖_*, which bounds
  /// ‖∇fᵢ − ∇f‖_* uniformly in y.
  OracleSpec spec(const Geometry& g) const override;
  nlohmann::json to_json() const override;

  Vector term_gradient(std::size_t i, const Vector& y) const;
  std::size_t n_samples() const { return static_cast<std::size_t>(data_.rows()); }
  const Matrix& data() const { return data_; }
  const Vector& labels() const { return labels_; }
  std::uint64_t data_seed() const { return data_seed_; }
  void set_data_seed(std::uint64_t seed) { data_seed_ = seed; }

 private:
  Matrix data_;
  Vector labels_;
  std::uint64_t data_seed_ = 0;
};

/// Reports f_δ = f − u·δ with gradients unchanged.
class DeltaInexact final : public StochasticOracle {
 public:
  DeltaInexact(OraclePtr inner, double delta, double u);

  std::size_t dim() const override { return inner_->dim(); }
  std::string kind() const override { return "delta_inexact"; }
  double value(const Vector& y) const override { return inner_->value(y) - u_ * delta_; }
  double true_value(const Vector& y) const override { return inner_->true_value(y); }
  Vector exact_gradient(const Vector& y) const override { return inner_->exact_gradient(y); }
  Vector sample_gradient(const Vector& y, SplitMix64& rng) const override {
    return inner_->sample_gradient(y, rng);
  }
  OracleSpec spec(const Geometry& g) const override;
  nlohmann::json to_json() const override;

  const OraclePtr& inner() const { return inner_; }

 private:
  OraclePtr inner_;
  double delta_;
  double u_;
};

/// Wraps `problem` so it becomes a (δ, L)-oracle with f_δ = f − u·δ.
/// δ = 0 returns `problem` itself.
OraclePtr make_delta_inexact(OraclePtr problem, double delta, double u = 1.0);

OracleSample sample(const StochasticOracle& oracle, const Vector& y, SplitMix64& rng);

/// Mean of m draws; draw i comes from stream.for_sample(i).
BatchGradient minibatch_gradient(const StochasticOracle& oracle, const Vector& y, std::size_t m,
                                 const TrialStream& stream);

/// Smallest σ with E exp(‖g‖₂²/σ²) = e for g ~ N(0, s² Iₙ):
/// σ² = 2s² / (1 − e^{−2/n}).
double calibrate_sigma_gaussian(double noise_std, std::size_t dim);

OraclePtr oracle_from_json(const nlohmann::json& j);

}  // namespace astm
