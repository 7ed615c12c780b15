#include <cmath>
#include <cstring>
#include <random>

#include "astm/checks.hpp"
#include "astm/errors.hpp"
#include "astm/oracle.hpp"
#include "doctest.h"

using namespace astm;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::shared_ptr<NoisyQuadratic> small_quadratic(double s) {
  Matrix S(2, 2);
  S << 2.0, 0.5, 0.5, 1.0;
  return std::make_shared<NoisyQuadratic>(S, vec({1.0, -1.0}), s);
}

Vector central_difference(const StochasticOracle& o, const Vector& y, double h) {
  Vector g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Vector p = y, m = y;
    p[i] += h;
    m[i] -= h;
    g[i] = (o.value(p) - o.value(m)) / (2.0 * h);
  }
  return g;
}

// Bisection on (1 − 2s²/σ²)^(−n/2) = e in t = σ², independent of the closed form.
double sigma_sq_by_bisection(double s, int n) {
  double lo = 2.0 * s * s * (1.0 + 1e-15);
  double hi = 1e6 * s * s + 1.0;
  for (int it = 0; it < 300; ++it) {
    const double t = 0.5 * (lo + hi);
    const double lhs = -0.5 * n * std::log1p(-2.0 * s * s / t);
    (lhs > 1.0 ? lo : hi) = t;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("quadratic value and exact gradient") {
  auto q = small_quadratic(0.0);
  const Vector y = vec({0.3, -0.7});
  const Vector expect = q->hessian() * y - q->linear();
  CHECK((q->exact_gradient(y) - expect).norm() < 1e-15);
  CHECK((q->exact_gradient(Vector::Zero(2)) + q->linear()).norm() == 0.0);
  CHECK(q->value(y) == doctest::Approx(0.5 * y.dot(q->hessian() * y) - q->linear().dot(y)));
}

TEST_CASE("finite differences agree with exact gradients") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  auto q = NoisyQuadratic::with_spectrum(8, 0.1, 1.0, Vector::Ones(8), 0.3, 17);
  auto lg = FiniteSumLogistic::random(40, 8, 3);
  for (int t = 0; t < 10; ++t) {
    Vector y(8);
    for (int i = 0; i < 8; ++i) y[i] = normal(rng);
    for (const StochasticOracle* o : {static_cast<const StochasticOracle*>(q.get()),
                                      static_cast<const StochasticOracle*>(lg.get())}) {
      const Vector fd = central_difference(*o, y, 1e-6);
      const Vector ex = o->exact_gradient(y);
      CHECK((fd - ex).norm() <= 1e-5 * std::max(1.0, ex.norm()));
    }
  }
}

TEST_CASE("with_spectrum builds the requested eigenvalues") {
  auto q = NoisyQuadratic::with_spectrum(50, 0.1, 1.0, Vector::Zero(50), 0.0, 2024);
  Eigen::SelfAdjointEigenSolver<Matrix> es(q->hessian());
  for (int i = 0; i < 50; ++i) {
    CHECK(es.eigenvalues()[i] == doctest::Approx(0.1 + 0.9 * i / 49.0).epsilon(1e-10));
  }
  CHECK(q->max_eigenvalue() == doctest::Approx(1.0));
  CHECK(q->spec(Geometry::euclidean(50)).lipschitz == doctest::Approx(1.0));
}

TEST_CASE("quadratic construction errors") {
  Matrix asym(2, 2);
  asym << 1.0, 0.3, 0.0, 1.0;
  CHECK_THROWS_AS(NoisyQuadratic(asym, Vector::Zero(2), 0.0), ConfigError);
  Matrix indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(NoisyQuadratic(indef, Vector::Zero(2), 0.0), ConfigError);
  CHECK_THROWS_AS(NoisyQuadratic(Matrix::Identity(2, 2), Vector::Zero(3), 0.0), ConfigError);
  CHECK_THROWS_AS(NoisyQuadratic(Matrix::Identity(2, 2), Vector::Zero(2), -1.0), ConfigError);
}

TEST_CASE("sample with zero noise is the exact gradient") {
  auto q = small_quadratic(0.0);
  SplitMix64 rng(1);
  const Vector y = vec({0.1, 0.2});
  const OracleSample s = sample(*q, y, rng);
  CHECK(s.grad_sample == q->hessian() * y - q->linear());
  CHECK(s.f_value == q->value(y));
  CHECK_THROWS_AS(sample(*q, vec({1, 2, 3}), rng), DomainError);
  CHECK_THROWS_AS(sample(*q, vec({NAN, 2}), rng), DomainError);
}

TEST_CASE("empirical mean of samples is within the CLT band") {
  const double s = 0.5;
  const int n = 20;
  auto q = NoisyQuadratic::with_spectrum(n, 0.1, 1.0, Vector::Ones(n), s, 8);
  const Vector y = Vector::LinSpaced(n, -1.0, 1.0);
  Vector sum = Vector::Zero(n);
  const int draws = 100000;
  for (int d = 0; d < draws; ++d) {
    auto rng = substream(99, {static_cast<std::uint64_t>(d)});
    sum += q->sample_gradient(y, rng);
  }
  const double dev = (sum / draws - q->exact_gradient(y)).norm();
  CHECK(dev <= 4.0 * s * std::sqrt(static_cast<double>(n) / draws));
}

TEST_CASE("single-row logistic samples the full gradient") {
  Matrix a(1, 3);
  a << 0.5, -1.0, 2.0;
  FiniteSumLogistic lg(a, vec({-1.0}));
  SplitMix64 rng(3);
  const Vector y = vec({0.2, 0.1, -0.3});
  for (int t = 0; t < 10; ++t) CHECK((lg.sample_gradient(y, rng) - lg.exact_gradient(y)).norm() == 0.0);
  CHECK(lg.spec(Geometry::euclidean(3)).sigma == 0.0);
}

TEST_CASE("logistic exact gradient is the average of term gradients") {
  auto lg = FiniteSumLogistic::random(30, 5, 12);
  const Vector y = vec({0.3, -0.2, 0.5, 1.0, -1.0});
  Vector avg = Vector::Zero(5);
  for (std::size_t i = 0; i < lg->n_samples(); ++i) {
    // independent formula: −l a σ(−l aᵀy)
    const double l = lg->labels()[static_cast<Eigen::Index>(i)];
    const Vector a = lg->data().row(static_cast<Eigen::Index>(i)).transpose();
    const Vector term = -l * a / (1.0 + std::exp(l * a.dot(y)));
    CHECK((lg->term_gradient(i, y) - term).norm() < 1e-14);
    avg += term;
  }
  avg /= static_cast<double>(lg->n_samples());
  CHECK((lg->exact_gradient(y) - avg).norm() < 1e-14);
}

TEST_CASE("logistic labels are validated") {
  CHECK_THROWS_AS(FiniteSumLogistic(Matrix::Ones(2, 2), vec({1.0, 0.0})), ConfigError);
  CHECK_THROWS_AS(FiniteSumLogistic(Matrix::Ones(2, 2), vec({1.0})), ConfigError);
}

TEST_CASE("mini-batch gradient") {
  auto q = small_quadratic(0.7);
  const Vector y = vec({0.4, 0.1});
  const TrialStream stream{5, 2, 1};

  auto one = stream.for_sample(0);
  const BatchGradient b1 = minibatch_gradient(*q, y, 1, stream);
  CHECK(b1.mean_grad == q->sample_gradient(y, one));
  CHECK(b1.batch_size == 1);
  CHECK(b1.samples_drawn == 1);

  // the mean is the arithmetic mean of the per-index draws
  Vector sum = Vector::Zero(2);
  for (std::uint64_t i = 0; i < 7; ++i) {
    auto r = stream.for_sample(i);
    sum += q->sample_gradient(y, r);
  }
  const BatchGradient b7 = minibatch_gradient(*q, y, 7, stream);
  CHECK((b7.mean_grad - sum / 7.0).norm() < 1e-15);
  CHECK(b7.samples_drawn == 7);

  auto exact = small_quadratic(0.0);
  CHECK((minibatch_gradient(*exact, y, 33, stream).mean_grad - exact->exact_gradient(y)).norm() <= 1e-15);
  CHECK_THROWS_AS(minibatch_gradient(*q, y, 0, stream), ConfigError);
}

TEST_CASE("mini-batch golden value") {
  auto q = small_quadratic(1.0);
  const Vector y = vec({0.5, -0.25});
  const TrialStream stream{20240601, 3, 0};
  const BatchGradient a = minibatch_gradient(*q, y, 16, stream);
  const BatchGradient b = minibatch_gradient(*q, y, 16, stream);
  CHECK(std::memcmp(a.mean_grad.data(), b.mean_grad.data(), 2 * sizeof(double)) == 0);
  // recorded on first run
  CHECK(a.mean_grad[0] == -0.39538192893800961);
  CHECK(a.mean_grad[1] == 1.1409026777856464);
  const BatchGradient other = minibatch_gradient(*q, y, 16, TrialStream{20240601, 3, 1});
  CHECK(other.mean_grad != a.mean_grad);
}

TEST_CASE("sigma calibration") {
  CHECK(calibrate_sigma_gaussian(0.0, 5) == 0.0);
  const double s1 = calibrate_sigma_gaussian(1.0, 1);
  CHECK(s1 * s1 == doctest::Approx(2.0 / (1.0 - std::exp(-2.0))).epsilon(1e-12));
  CHECK(s1 * s1 == doctest::Approx(2.3130).epsilon(1e-4));
  CHECK(s1 * s1 == doctest::Approx(sigma_sq_by_bisection(1.0, 1)).epsilon(1e-10));
  const double s10 = calibrate_sigma_gaussian(0.1, 10);
  CHECK(s10 * s10 == doctest::Approx(0.11033).epsilon(1e-4));
  CHECK(s10 * s10 == doctest::Approx(sigma_sq_by_bisection(0.1, 10)).epsilon(1e-10));
  for (int n : {2, 20, 1000, 100000}) {
    const double s = calibrate_sigma_gaussian(0.3, static_cast<std::size_t>(n));
    CHECK(s * s == doctest::Approx(sigma_sq_by_bisection(0.3, n)).epsilon(1e-9));
  }
}

TEST_CASE("calibrated sigma passes a Monte Carlo moment check") {
  // E exp(g²/σ²) = e exactly at the calibration; the sample mean has heavy
  // right tails, so allow the same 5% slack as the oracle checks.
  const double sigma = calibrate_sigma_gaussian(1.0, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  double acc = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    const double g = normal(rng);
    acc += std::exp(g * g / (sigma * sigma));
  }
  CHECK(acc / draws <= std::exp(1.0) * 1.05);
  CHECK(acc / draws >= 2.0);
}

TEST_CASE("delta-inexact wrapper") {
  OraclePtr q = small_quadratic(0.2);
  CHECK(make_delta_inexact(q, 0.0) == q);
  auto w = make_delta_inexact(q, 0.1, 1.0);
  const Vector y = vec({0.3, 0.4});
  CHECK(w->value(y) == doctest::Approx(q->value(y) - 0.1).epsilon(1e-15));
  CHECK(w->true_value(y) == q->value(y));
  CHECK(w->exact_gradient(y) == q->exact_gradient(y));
  SplitMix64 r1(4), r2(4);
  CHECK(w->sample_gradient(y, r1) == q->sample_gradient(y, r2));
  const auto g = Geometry::euclidean(2);
  CHECK(w->spec(g).delta == doctest::Approx(q->spec(g).delta + 0.1));
  CHECK_THROWS_AS(make_delta_inexact(q, -0.1), ConfigError);
  CHECK_THROWS_AS(make_delta_inexact(q, 0.1, 1.5), ConfigError);

  // f_δ ≤ f ≤ f_δ + δ
  for (double u : {0.0, 0.37, 1.0}) {
    auto wu = make_delta_inexact(q, 0.1, u);
    CHECK(wu->value(y) <= wu->true_value(y));
    CHECK(wu->true_value(y) <= wu->value(y) + 0.1 + 1e-15);
  }
}

TEST_CASE("oracle condition checks") {
  const auto g = Geometry::euclidean(10);
  const auto box = FeasibleSet::box(Vector::Constant(10, -1.0), Vector::Constant(10, 1.0));
  auto q = NoisyQuadratic::with_spectrum(10, 0.1, 1.0, Vector::Ones(10), 0.1, 3);

  SUBCASE("calibrated gaussian passes") {
    const auto rep = check_oracle_conditions(*q, g, box, q->spec(g));
    CHECK(rep.unbiased_ok);
    CHECK(rep.max_abs_z < 5.0);
    CHECK(rep.st2_ok);
    CHECK(rep.st2_moment <= std::exp(1.0) * 1.05);
    CHECK(rep.sandwich_ok);
    CHECK(rep.sandwich_lower_min >= -1e-9);
  }
  SUBCASE("half sigma fails ST2") {
    OracleSpec half = q->spec(g);
    half.sigma /= 2.0;
    OracleCheckOptions opts;
    opts.draws = 20000;
    const auto rep = check_oracle_conditions(*q, g, box, half, opts);
    CHECK_FALSE(rep.st2_ok);
    CHECK(rep.unbiased_ok);
  }
  SUBCASE("noiseless passes trivially") {
    auto q0 = NoisyQuadratic::with_spectrum(10, 0.1, 1.0, Vector::Ones(10), 0.0, 3);
    OracleCheckOptions opts;
    opts.draws = 100;
    const auto rep = check_oracle_conditions(*q0, g, box, q0->spec(g), opts);
    CHECK(rep.all_pass());
    CHECK(rep.max_abs_z == 0.0);
  }
  SUBCASE("understated L fails the sandwich") {
    OracleSpec bad = q->spec(g);
    bad.lipschitz *= 0.5;
    OracleCheckOptions opts;
    opts.draws = 100;
    CHECK_FALSE(check_oracle_conditions(*q, g, box, bad, opts).sandwich_ok);
  }
  SUBCASE("delta-inexact wrapper passes the sandwich") {
    auto w = make_delta_inexact(q, 0.05, 0.6);
    OracleCheckOptions opts;
    opts.draws = 1000;
    const auto rep = check_oracle_conditions(*w, g, box, w->spec(g), opts);
    CHECK(rep.sandwich_ok);
    // f_δ sits 0.03 below f, so the lower side has at least that margin
    CHECK(rep.sandwich_lower_min >= 0.03 - 1e-12);
  }
  SUBCASE("logistic oracle passes") {
    auto lg = FiniteSumLogistic::random(50, 10, 9);
    OracleCheckOptions opts;
    opts.draws = 20000;
    CHECK(check_oracle_conditions(*lg, g, box, lg->spec(g), opts).all_pass());
  }
}

TEST_CASE("identical seeds give identical streams") {
  auto a = substream(42, {1, 2, 3});
  auto b = substream(42, {1, 2, 3});
  auto c = substream(42, {1, 2, 4});
  auto d = substream(43, {1, 2, 3});
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs_c |= x != c();
    differs_d |= x != d();
  }
  CHECK(differs_c);
  CHECK(differs_d);
}

TEST_CASE("oracle json round trip") {
  auto q = NoisyQuadratic::with_spectrum(4, 0.2, 0.9, vec({1, 2, 3, 4}), 0.25, 77);
  auto back = oracle_from_json(q->to_json());
  const Vector y = vec({0.1, -0.2, 0.3, 0.4});
  CHECK(back->value(y) == q->value(y));
  CHECK(back->to_json() == q->to_json());
  SplitMix64 r1(8), r2(8);
  CHECK(back->sample_gradient(y, r1) == q->sample_gradient(y, r2));

  auto lg = FiniteSumLogistic::random(7, 4, 5);
  auto w = make_delta_inexact(lg, 0.01, 0.5);
  auto wb = oracle_from_json(w->to_json());
  CHECK(wb->kind() == "delta_inexact");
  CHECK(wb->value(y) == w->value(y));
  CHECK(wb->to_json().dump() == w->to_json().dump());
  CHECK_THROWS_AS(oracle_from_json({{"kind", "nope"}}), ConfigError);
}
