#include "hrom/lemma_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hrom/random.hpp"

namespace hrom {

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, double scale, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * standard_normal(rng);
  return m;
}

// Alternatives alternate between perturbations of the optimum at
// log-uniform scales and unrelated random triples at the scale of A.
ReductionTriple alternative(const ReductionTriple& opt, double a_norm, int j, double log_lo, Rng& rng) {
  const Eigen::Index nx = opt.state_dim();
  const Eigen::Index nz = opt.latent_dim();
  ReductionTriple t;
  if (j % 2 == 0) {
    const double eps = std::pow(10.0, uniform(rng, log_lo, 0.0));
    t.d = opt.d + gaussian(nx, nz, eps, rng);
    t.q = opt.q + gaussian(nz, nz, eps * a_norm, rng);
    t.e = opt.e + gaussian(nz, nx, eps, rng);
  } else {
    t.d = gaussian(nx, nz, 1.0 / std::sqrt(static_cast<double>(nx)), rng);
    t.q = gaussian(nz, nz, a_norm / std::sqrt(static_cast<double>(nz)), rng);
    t.e = gaussian(nz, nx, 1.0 / std::sqrt(static_cast<double>(nx)), rng);
  }
  return t;
}

}  // namespace

OneStepSuite check_one_step_optimality(int instances, int alternatives, std::uint64_t seed, double tol) {
  if (instances < 1 || alternatives < 0) throw InvalidInput("lemma checks: instances must be >= 1");
  OneStepSuite suite;
  suite.min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < instances; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    const int n = 3 + std::min(5, static_cast<int>(uniform01(rng) * 6.0));
    const Matrix a = gaussian(n, n, 1.0, rng);
    const double a_norm = a.norm();
    const SvdResult s = svd(a);
    const Eigen::Index rank = numerical_rank(s.sigma);
    for (Eigen::Index nz = 1; nz <= rank; ++nz) {
      const ReductionTriple t = one_step_optimal(a, nz);
      OneStepRecord rec;
      rec.instance = i;
      rec.n_x = n;
      rec.n_z = static_cast<int>(nz);
      rec.sigma_next = nz < s.sigma.size() ? s.sigma(nz) : 0.0;
      rec.error = one_step_error(a, t);
      rec.identity_gap = std::abs(rec.error - rec.sigma_next);
      rec.min_margin = std::numeric_limits<double>::infinity();
      for (int j = 0; j < alternatives; ++j) {
        const ReductionTriple alt = alternative(t, a_norm, j, -6.0, rng);
        rec.min_margin = std::min(rec.min_margin, one_step_error(a, alt) - rec.error);
      }
      suite.max_identity_gap = std::max(suite.max_identity_gap, rec.identity_gap);
      suite.min_margin = std::min(suite.min_margin, rec.min_margin);
      suite.records.push_back(rec);
    }
  }
  suite.identity_pass = suite.max_identity_gap <= tol;
  suite.optimality_pass = suite.min_margin >= -tol;
  return suite;
}

DiagonalSuite check_diagonal_optimality(int instances, int alternatives, std::uint64_t seed, long horizon,
                                        double tol) {
  if (instances < 1 || alternatives < 0) throw InvalidInput("lemma checks: instances must be >= 1");
  if (horizon < 1) throw InvalidInput("lemma checks: horizon must be >= 1");
  DiagonalSuite suite;
  suite.min_margin = std::numeric_limits<double>::infinity();
  suite.horizon_one_pass = true;
  for (int i = 0; i < instances; ++i) {
    Rng rng = make_rng(seed, 1000000u + static_cast<std::uint64_t>(i));
    const int nx = 2 + std::min(4, static_cast<int>(uniform01(rng) * 5.0));
    const int nz = 1 + std::min(nx - 2, static_cast<int>(uniform01(rng) * (nx - 1)));
    std::vector<double> tail(static_cast<std::size_t>(nx - nz)), head(static_cast<std::size_t>(nz));
    for (auto& v : tail) v = uniform(rng, 0.05, 0.95);
    std::sort(tail.begin(), tail.end(), std::greater<>());
    for (auto& v : head) v = uniform(rng, tail.front(), 0.995);
    std::sort(head.begin(), head.end(), std::greater<>());
    std::vector<double> lambdas(head);
    lambdas.insert(lambdas.end(), tail.begin(), tail.end());
    for (auto& v : lambdas)
      if (uniform01(rng) < 0.5) v = -v;

    DiagonalRecord rec;
    rec.instance = i;
    rec.lambdas = lambdas;
    rec.n_z = nz;
    const ReductionTriple t = diagonal_truncation(lambdas, nz);
    rec.closed_form = h2_objective_closed_form(lambdas, nz);
    rec.partial_sum = h2_objective(lambdas, t, horizon);
    rec.horizon_one = h2_objective(lambdas, t, 1);
    double a_norm = 0.0;
    for (double v : lambdas) a_norm += v * v;
    a_norm = std::sqrt(a_norm);
    rec.min_margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < alternatives; ++j) {
      const ReductionTriple alt = alternative(t, a_norm, j, -4.0, rng);
      const double v = h2_objective(lambdas, alt, horizon, rec.partial_sum);
      rec.min_margin = std::min(rec.min_margin, v - rec.partial_sum);
    }
    suite.max_closed_form_gap = std::max(suite.max_closed_form_gap, std::abs(rec.closed_form - rec.partial_sum));
    if (rec.horizon_one != static_cast<double>(nx - nz)) suite.horizon_one_pass = false;
    suite.min_margin = std::min(suite.min_margin, rec.min_margin);
    suite.records.push_back(rec);
  }
  suite.closed_form_pass = suite.max_closed_form_gap <= tol;
  // Strict: no alternative may come in below the truncation at all.
  suite.optimality_pass = suite.min_margin >= 0.0;
  return suite;
}

}  // namespace hrom
