#include "astm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "astm/errors.hpp"

namespace astm {

namespace {

void require_input(const StochasticOracle& o, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != o.dim()) {
    throw DomainError("oracle query has dimension " + std::to_string(y.size()) + ", expected " +
                      std::to_string(o.dim()));
  }
  if (!y.allFinite()) throw DomainError("oracle query has non-finite entries");
}

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Vector row = m.row(i).transpose();
    rows.push_back(vector_to_json(row));
  }
  return rows;
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ConfigError("ragged matrix in json");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

// log(1 + exp(-t)) without overflow
double softplus_neg(double t) {
  return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

// 1 / (1 + exp(t))
double sigmoid_neg(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

}  // namespace

void OracleSpec::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("oracle delta must be >= 0");
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw ConfigError("oracle lipschitz constant must be > 0");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("oracle sigma must be >= 0");
}

// --- NoisyQuadratic ---------------------------------------------------------

NoisyQuadratic::NoisyQuadratic(Matrix sigma_mat, Vector b, double noise_std)
    : sigma_mat_(std::move(sigma_mat)), b_(std::move(b)), noise_std_(noise_std) {
  if (sigma_mat_.rows() != sigma_mat_.cols() || sigma_mat_.rows() != b_.size() || b_.size() == 0) {
    throw ConfigError("quadratic: matrix must be square and match b");
  }
  if (!sigma_mat_.allFinite() || !b_.allFinite()) throw ConfigError("quadratic: non-finite data");
  if (!(noise_std_ >= 0.0)) throw ConfigError("quadratic: noise std must be >= 0");
  const double asym = (sigma_mat_ - sigma_mat_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, sigma_mat_.cwiseAbs().maxCoeff())) {
    throw ConfigError("quadratic: matrix is not symmetric");
  }
  sigma_mat_ = 0.5 * (sigma_mat_ + sigma_mat_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma_mat_, Eigen::EigenvaluesOnly);
  eig_min_ = es.eigenvalues().minCoeff();
  eig_max_ = es.eigenvalues().maxCoeff();
  if (!(eig_min_ > 0.0)) throw ConfigError("quadratic: matrix must be positive definite");
}

std::shared_ptr<NoisyQuadratic> NoisyQuadratic::with_spectrum(std::size_t dim, double lo, double hi,
                                                              Vector b, double noise_std,
                                                              std::uint64_t data_seed) {
  if (dim == 0) throw ConfigError("quadratic: dim must be >= 1");
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("quadratic: spectrum must satisfy 0 < lo <= hi");
  Vector eig(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    eig[i] = dim == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(dim - 1);
  }
  auto rng = substream(data_seed, {0x51});
  std::normal_distribution<double> normal;
  Matrix gauss(dim, dim);
  for (Eigen::Index c = 0; c < gauss.cols(); ++c) {
    for (Eigen::Index r = 0; r < gauss.rows(); ++r) gauss(r, c) = normal(rng);
  }
  Matrix basis = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  Matrix s = basis * eig.asDiagonal() * basis.transpose();
  s = 0.5 * (s + s.transpose()).eval();
  auto q = std::make_shared<NoisyQuadratic>(std::move(s), std::move(b), noise_std);
  q->set_data_seed(data_seed);
  return q;
}

double NoisyQuadratic::value(const Vector& y) const {
  require_input(*this, y);
  return 0.5 * y.dot(sigma_mat_ * y) - b_.dot(y);
}

Vector NoisyQuadratic::exact_gradient(const Vector& y) const {
  require_input(*this, y);
  return sigma_mat_ * y - b_;
}

Vector NoisyQuadratic::sample_gradient(const Vector& y, SplitMix64& rng) const {
  Vector g = exact_gradient(y);
  if (noise_std_ > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_std_);
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] += normal(rng);
  }
  return g;
}

OracleSpec NoisyQuadratic::spec(const Geometry& g) const {
  OracleSpec s;
  // max over ‖v‖₁ ≤ 1 of vᵀΣv is attained at a vertex ±eᵢ
  s.lipschitz = g.norm() == Norm::L2 ? eig_max_ : sigma_mat_.diagonal().maxCoeff();
  // ‖·‖∞ ≤ ‖·‖₂, so the Euclidean calibration is valid for the ℓ∞ dual too
  s.sigma = calibrate_sigma_gaussian(noise_std_, dim());
  return s;
}

nlohmann::json NoisyQuadratic::to_json() const {
  return {{"kind", kind()},
          {"hessian", matrix_to_json(sigma_mat_)},
          {"b", vector_to_json(b_)},
          {"noise_std", noise_std_},
          {"data_seed", data_seed_}};
}

// --- FiniteSumLogistic ------------------------------------------------------

FiniteSumLogistic::FiniteSumLogistic(Matrix data, Vector labels)
    : data_(std::move(data)), labels_(std::move(labels)) {
  if (data_.rows() == 0 || data_.cols() == 0) throw ConfigError("logistic: empty data matrix");
  if (data_.rows() != labels_.size()) throw ConfigError("logistic: labels do not match data rows");
  if (!data_.allFinite()) throw ConfigError("logistic: non-finite data");
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) throw ConfigError("logistic: labels must be +-1");
  }
}

std::shared_ptr<FiniteSumLogistic> FiniteSumLogistic::random(std::size_t n_samples, std::size_t dim,
                                                             std::uint64_t data_seed) {
  if (n_samples == 0 || dim == 0) throw ConfigError("logistic: sizes must be >= 1");
  auto rng = substream(data_seed, {0x10});
  std::normal_distribution<double> normal;
  std::bernoulli_distribution flip(0.1);
  Vector w(dim);
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(rng);
  Matrix a(n_samples, dim);
  Vector labels(n_samples);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = scale * normal(rng);
    double l = a.row(r).dot(w) >= 0.0 ? 1.0 : -1.0;
    if (flip(rng)) l = -l;
    labels[r] = l;
  }
  auto p = std::make_shared<FiniteSumLogistic>(std::move(a), std::move(labels));
  p->set_data_seed(data_seed);
  return p;
}

double FiniteSumLogistic::value(const Vector& y) const {
  require_input(*this, y);
  const Vector margins = labels_.cwiseProduct(data_ * y);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) acc += softplus_neg(margins[i]);
  return acc / static_cast<double>(margins.size());
}

Vector FiniteSumLogistic::term_gradient(std::size_t i, const Vector& y) const {
  const auto row = static_cast<Eigen::Index>(i);
  const double margin = labels_[row] * data_.row(row).dot(y);
  return (-labels_[row] * sigmoid_neg(margin)) * data_.row(row).transpose();
}

Vector FiniteSumLogistic::exact_gradient(const Vector& y) const {
  require_input(*this, y);
  const Vector margins = labels_.cwiseProduct(data_ * y);
  Vector weights(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    weights[i] = -labels_[i] * sigmoid_neg(margins[i]);
  }
  return data_.transpose() * weights / static_cast<double>(margins.size());
}

Vector FiniteSumLogistic::sample_gradient(const Vector& y, SplitMix64& rng) const {
  require_input(*this, y);
  std::uniform_int_distribution<std::size_t> pick(0, n_samples() - 1);
  return term_gradient(pick(rng), y);
}

OracleSpec FiniteSumLogistic::spec(const Geometry& g) const {
  OracleSpec s;
  const double n = static_cast<double>(n_samples());
  double max_dual = 0.0;
  if (g.norm() == Norm::L2) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(data_.transpose() * data_, Eigen::EigenvaluesOnly);
    s.lipschitz = es.eigenvalues().maxCoeff() / (4.0 * n);
    max_dual = data_.rowwise().norm().maxCoeff();
  } else {
    // Σ (aᵢᵀv)² ≤ Σ ‖aᵢ‖∞² ‖v‖₁²
    const Vector row_inf = data_.cwiseAbs().rowwise().maxCoeff();
    s.lipschitz = row_inf.squaredNorm() / (4.0 * n);
    max_dual = row_inf.maxCoeff();
  }
  s.lipschitz = std::max(s.lipschitz, std::numeric_limits<double>::min());
  s.sigma = n_samples() == 1 ? 0.0 : 2.0 * max_dual;
  return s;
}

nlohmann::json FiniteSumLogistic::to_json() const {
  return {{"kind", kind()},
          {"data", matrix_to_json(data_)},
          {"labels", vector_to_json(labels_)},
          {"data_seed", data_seed_}};
}

// --- DeltaInexact -----------------------------------------------------------

DeltaInexact::DeltaInexact(OraclePtr inner, double delta, double u)
    : inner_(std::move(inner)), delta_(delta), u_(u) {
  if (!inner_) throw ConfigError("delta_inexact: null inner oracle");
  if (!(delta_ >= 0.0)) throw ConfigError("delta_inexact: delta must be >= 0");
  if (!(u_ >= 0.0 && u_ <= 1.0)) throw ConfigError("delta_inexact: u must lie in [0, 1]");
}

OracleSpec DeltaInexact::spec(const Geometry& g) const {
  OracleSpec s = inner_->spec(g);
  s.delta += delta_;
  return s;
}

nlohmann::json DeltaInexact::to_json() const {
  return {{"kind", kind()}, {"inner", inner_->to_json()}, {"delta", delta_}, {"u", u_}};
}

OraclePtr make_delta_inexact(OraclePtr problem, double delta, double u) {
  if (!(delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (delta == 0.0) return problem;
  return std::make_shared<DeltaInexact>(std::move(problem), delta, u);
}

// --- sampling ---------------------------------------------------------------

OracleSample sample(const StochasticOracle& oracle, const Vector& y, SplitMix64& rng) {
  require_input(oracle, y);
  return {oracle.value(y), oracle.sample_gradient(y, rng)};
}

BatchGradient minibatch_gradient(const StochasticOracle& oracle, const Vector& y, std::size_t m,
                                 const TrialStream& stream) {
  if (m == 0) throw ConfigError("mini-batch size must be >= 1");
  require_input(oracle, y);
  BatchGradient out;
  out.mean_grad = Vector::Zero(y.size());
  for (std::size_t i = 0; i < m; ++i) {
    auto rng = stream.for_sample(i);
    out.mean_grad += oracle.sample_gradient(y, rng);
  }
  out.mean_grad /= static_cast<double>(m);
  out.batch_size = m;
  out.samples_drawn = m;
  return out;
}

double calibrate_sigma_gaussian(double noise_std, std::size_t dim) {
  if (!(noise_std >= 0.0)) throw ConfigError("noise std must be >= 0");
  if (dim == 0) throw ConfigError("dimension must be >= 1");
  if (noise_std == 0.0) return 0.0;
  // (1 − 2s²/σ²)^{−n/2} = e  ⟺  σ² = 2s² / (1 − e^{−2/n})
  const double denom = -std::expm1(-2.0 / static_cast<double>(dim));
  return std::sqrt(2.0 * noise_std * noise_std / denom);
}

OraclePtr oracle_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "noisy_quadratic") {
    auto q = std::make_shared<NoisyQuadratic>(matrix_from_json(j.at("hessian")),
                                              vector_from_json(j.at("b")),
                                              j.at("noise_std").get<double>());
    q->set_data_seed(j.value("data_seed", std::uint64_t{0}));
    return q;
  }
  if (kind == "logistic") {
    auto p = std::make_shared<FiniteSumLogistic>(matrix_from_json(j.at("data")),
                                                 vector_from_json(j.at("labels")));
    p->set_data_seed(j.value("data_seed", std::uint64_t{0}));
    return p;
  }
  if (kind == "delta_inexact") {
    return std::make_shared<DeltaInexact>(oracle_from_json(j.at("inner")),
                                          j.at("delta").get<double>(), j.value("u", 1.0));
  }
  throw ConfigError("unknown oracle kind '" + kind + "'");
}

}  // namespace astm
