#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "postwalk/density.hpp"

namespace postwalk {

/// Sampled evolution of a walk: node populations, l1 coherence and optionally
/// the trace distance to a reference state.
struct Trajectory {
  std::vector<double> times;
  std::vector<RealVector> populations;
  std::vector<double> coherence_l1;
  std::vector<double> trace_distance;  // empty when no reference state was given
  std::optional<DensityState> final_state;
  InvariantSummary invariants;
};

/// Sum of moduli of the off-diagonal entries.
double l1_coherence(const ComplexMatrix& rho);

/// Half the trace norm of (a - b), from the eigenvalues of the Hermitian difference.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

/// Gamma function on [0.05, 170]; throws std::domain_error outside.
double gamma_function(double x);

/// Relaxation time of a stretched exponential exp(-(k t)^beta).
double kww_relaxation_time(double k, double beta);

struct KwwFit {
  double d0 = 0.0;
  double k = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double rss = 0.0;
  double r2 = 0.0;
  bool reliable = false;  ///< r2 >= 0.5
};

/// Least-squares fit of D0 * exp(-(k t)^beta). Samples <= 1e-12 are dropped;
/// at least 8 usable samples are required.
KwwFit fit_stretched_exponential(std::span<const double> times, std::span<const double> values);

double kww_model(const KwwFit& fit, double t);

/// tau ~ a / (1 - eta)^b + c
struct PowerLawFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double rss = 0.0;
  double r2 = 0.0;
};

/// tau ~ c * exp(-d p) + e
struct ExpDecayFit {
  double c = 0.0;
  double d = 0.0;
  double e = 0.0;
  double rss = 0.0;
  double r2 = 0.0;
};

PowerLawFit fit_tau_vs_eta(std::span<const double> etas, std::span<const double> taus);
ExpDecayFit fit_tau_vs_p(std::span<const double> ps, std::span<const double> taus);

double coefficient_of_determination(std::span<const double> values, double rss);

/// Nelder-Mead simplex minimization, restarted from the best vertex until a
/// full pass no longer improves the objective.
struct SimplexOptions {
  double relative_tolerance = 1e-12;
  int max_iterations = 10000;
  double initial_step = 0.1;  ///< relative step used to build the starting simplex
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

SimplexResult minimize_simplex(const std::function<double(std::span<const double>)>& objective,
                               std::vector<double> start, const SimplexOptions& options = {});

}  // namespace postwalk
