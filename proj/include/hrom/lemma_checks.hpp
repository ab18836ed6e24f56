#pragma once

#include <cstdint>
#include <vector>

#include "hrom/linear_reduction.hpp"

namespace hrom {

// Randomized property suites for the two closed-form reductions. Both are
// deterministic in (instances, alternatives, seed).

struct OneStepRecord {
  int instance = 0;
  int n_x = 0;
  int n_z = 0;
  double sigma_next = 0.0;  // sigma_{n_z+1}, 0 when n_z = n_x
  double error = 0.0;       // one_step_error of the closed-form triple
  double identity_gap = 0.0;
  double min_margin = 0.0;  // min over alternatives of (alt error - error)
};

struct OneStepSuite {
  std::vector<OneStepRecord> records;
  double max_identity_gap = 0.0;
  double min_margin = 0.0;
  bool identity_pass = false;
  bool optimality_pass = false;
  bool passed() const { return identity_pass && optimality_pass; }
};

/// Random n x n Gaussian A with n in {3..8}; every n_z up to rank(A);
/// `alternatives` random triples per (A, n_z).
OneStepSuite check_one_step_optimality(int instances, int alternatives, std::uint64_t seed, double tol = 1e-9);

struct DiagonalRecord {
  int instance = 0;
  std::vector<double> lambdas;
  int n_z = 0;
  double closed_form = 0.0;
  double partial_sum = 0.0;
  double horizon_one = 0.0;
  double min_margin = 0.0;  // min over alternatives of (alt objective - objective)
};

struct DiagonalSuite {
  std::vector<DiagonalRecord> records;
  double max_closed_form_gap = 0.0;
  bool closed_form_pass = false;
  bool horizon_one_pass = false;
  bool optimality_pass = false;
  double min_margin = 0.0;
  bool passed() const { return closed_form_pass && horizon_one_pass && optimality_pass; }
};

/// Stable diagonal systems with n_x in {2..6} and a random split n_z; dropped
/// modes have magnitude below 0.95 and below every retained mode.
DiagonalSuite check_diagonal_optimality(int instances, int alternatives, std::uint64_t seed, long horizon = 10000,
                                        double tol = 1e-8);

}  // namespace hrom
