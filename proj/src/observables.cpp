#include "postwalk/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace postwalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFitFloor = 1e-12;
constexpr double kBetaMin = 0.05;
constexpr double kBetaMax = 2.0;

double sum_squares(std::span<const double> r) {
  return std::accumulate(r.begin(), r.end(), 0.0, [](double acc, double v) { return acc + v * v; });
}

struct LinearLsq {
  double slope = 0.0;
  double intercept = 0.0;
};

LinearLsq linear_regression(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearLsq out;
  out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  out.intercept = my - out.slope * mx;
  return out;
}

// Least squares for y ~ a * f(x) + c with f fixed; returns rss.
double affine_fit(std::span<const double> f, std::span<const double> y, double& a, double& c) {
  const LinearLsq l = linear_regression(f, y);
  a = l.slope;
  c = l.intercept;
  double rss = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = y[i] - (a * f[i] + c);
    rss += r * r;
  }
  return rss;
}

}  // namespace

double l1_coherence(const ComplexMatrix& rho) {
  return rho.cwiseAbs().sum() - rho.diagonal().cwiseAbs().sum();
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("trace_distance: dimension mismatch");
  }
  const auto half_norm = [](const ComplexMatrix& d) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(d), Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
  };
  // both orders, so that swapping the arguments gives a bitwise-equal result
  return 0.5 * (half_norm(a - b) + half_norm(b - a));
}

double gamma_function(double x) {
  if (!(x >= 0.05 && x <= 170.0)) {
    throw std::domain_error("gamma_function: argument " + std::to_string(x) + " outside [0.05, 170]");
  }
  return std::tgamma(x);
}

double kww_relaxation_time(double k, double beta) {
  if (!(k > 0.0) || !(beta > 0.0)) throw std::domain_error("kww_relaxation_time needs k > 0 and beta > 0");
  return gamma_function(1.0 / beta) / (beta * k);
}

double coefficient_of_determination(std::span<const double> values, double rss) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double tss = 0.0;
  for (double v : values) tss += (v - mean) * (v - mean);
  if (tss > 0.0) return 1.0 - rss / tss;
  // constant data: a perfect fit is still a perfect fit
  const double scale = std::max(1.0, sum_squares(values));
  return rss <= 1e-24 * scale ? 1.0 : -kInf;
}

SimplexResult minimize_simplex(const std::function<double(std::span<const double>)>& objective,
                               std::vector<double> start, const SimplexOptions& options) {
  const std::size_t n = start.size();
  if (n == 0) throw std::invalid_argument("minimize_simplex: empty parameter vector");

  SimplexResult best{start, objective(start), 0};
  int iterations = 0;

  while (iterations < options.max_iterations) {
    std::vector<std::vector<double>> simplex(n + 1, best.x);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = best.x[i];
      simplex[i + 1][i] = x != 0.0 ? x * (1.0 + options.initial_step) : 2.5e-4;
    }
    std::vector<double> f(n + 1);
    for (std::size_t i = 0; i <= n; ++i) f[i] = objective(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    while (iterations < options.max_iterations) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t second = order[n - 1];

      const double spread = f[hi] - f[lo];
      bool collapsed = true;
      for (std::size_t i = 0; i <= n && collapsed; ++i)
        for (std::size_t d = 0; d < n; ++d)
          if (std::abs(simplex[i][d] - simplex[lo][d]) > 1e-15 * (1.0 + std::abs(simplex[lo][d]))) {
            collapsed = false;
            break;
          }
      if ((std::isfinite(f[hi]) && spread <= options.relative_tolerance * std::abs(f[lo])) || collapsed) break;
      ++iterations;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i <= n; ++i)
        if (i != hi)
          for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / static_cast<double>(n);

      for (std::size_t d = 0; d < n; ++d) trial[d] = centroid[d] + (centroid[d] - simplex[hi][d]);
      const double fr = objective(trial);
      if (fr < f[lo]) {
        for (std::size_t d = 0; d < n; ++d) trial2[d] = centroid[d] + 2.0 * (centroid[d] - simplex[hi][d]);
        const double fe = objective(trial2);
        if (fe < fr) {
          simplex[hi] = trial2;
          f[hi] = fe;
        } else {
          simplex[hi] = trial;
          f[hi] = fr;
        }
        continue;
      }
      if (fr < f[second]) {
        simplex[hi] = trial;
        f[hi] = fr;
        continue;
      }
      const bool outside = fr < f[hi];
      for (std::size_t d = 0; d < n; ++d) {
        trial2[d] = outside ? centroid[d] + 0.5 * (trial[d] - centroid[d])
                            : centroid[d] + 0.5 * (simplex[hi][d] - centroid[d]);
      }
      const double fc = objective(trial2);
      if (fc < (outside ? fr : f[hi])) {
        simplex[hi] = trial2;
        f[hi] = fc;
        continue;
      }
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == lo) continue;
        for (std::size_t d = 0; d < n; ++d) simplex[i][d] = simplex[lo][d] + 0.5 * (simplex[i][d] - simplex[lo][d]);
        f[i] = objective(simplex[i]);
      }
    }

    const auto lo = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
    const double previous = best.value;
    if (f[lo] < best.value) {
      best.x = simplex[lo];
      best.value = f[lo];
    }
    // restart until a full descent no longer improves the best point
    if (!(previous - best.value > options.relative_tolerance * std::abs(best.value))) break;
  }
  best.iterations = iterations;
  return best;
}

double kww_model(const KwwFit& fit, double t) { return fit.d0 * std::exp(-std::pow(fit.k * t, fit.beta)); }

KwwFit fit_stretched_exponential(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw std::invalid_argument("fit_stretched_exponential: length mismatch");
  std::vector<double> t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (values[i] > kFitFloor && std::isfinite(values[i]) && times[i] >= 0.0) {
      t.push_back(times[i]);
      y.push_back(values[i]);
    }
  }
  if (t.size() < 8) {
    throw std::invalid_argument("fit_stretched_exponential: need at least 8 samples above 1e-12, got " +
                                std::to_string(t.size()));
  }

  const auto rss_of = [&](std::span<const double> v) {
    const double d0 = v[0], k = std::exp(v[1]), beta = v[2];
    if (!(beta >= kBetaMin && beta <= kBetaMax) || !std::isfinite(k)) return kInf;
    double rss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = y[i] - d0 * std::exp(-std::pow(k * t[i], beta));
      rss += r * r;
    }
    return std::isfinite(rss) ? rss : kInf;
  };

  // double-log linearization around the first sample
  const double y0 = y.front();
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ratio = y[i] / y0;
    if (t[i] > 0.0 && ratio > 0.0 && ratio < 1.0) {
      lx.push_back(std::log(t[i]));
      ly.push_back(std::log(-std::log(ratio)));
    }
  }
  const double span = t.back() - t.front();
  std::vector<std::vector<double>> starts;
  if (lx.size() >= 2) {
    const LinearLsq l = linear_regression(lx, ly);
    const double beta = std::clamp(l.slope, 0.1, kBetaMax);
    starts.push_back({y0, l.intercept / beta, beta});
  }
  const double log_k0 = std::log(1.0 / std::max(span / 4.0, 1e-12));
  starts.push_back({y0, log_k0, 1.0});
  starts.push_back({y0, log_k0, 0.5});

  SimplexResult best;
  best.value = kInf;
  for (auto& s : starts) {
    SimplexResult r = minimize_simplex(rss_of, s);
    if (r.value < best.value) best = std::move(r);
  }
  if (!std::isfinite(best.value)) throw std::runtime_error("fit_stretched_exponential: no finite fit found");

  KwwFit fit;
  fit.d0 = best.x[0];
  fit.k = std::exp(best.x[1]);
  fit.beta = best.x[2];
  fit.tau = kww_relaxation_time(fit.k, fit.beta);
  fit.rss = best.value;
  fit.r2 = coefficient_of_determination(y, fit.rss);
  fit.reliable = fit.r2 >= 0.5;
  return fit;
}

PowerLawFit fit_tau_vs_eta(std::span<const double> etas, std::span<const double> taus) {
  if (etas.size() != taus.size()) throw std::invalid_argument("fit_tau_vs_eta: length mismatch");
  if (etas.size() < 4) throw std::invalid_argument("fit_tau_vs_eta: need at least 4 points");
  for (double e : etas) {
    if (!(e >= 0.0 && e < 1.0)) throw std::invalid_argument("fit_tau_vs_eta: eta must lie in [0, 1)");
  }
  const auto model_rss = [&](double a, double b, double c) {
    double rss = 0.0;
    for (std::size_t i = 0; i < etas.size(); ++i) {
      const double r = taus[i] - (a / std::pow(1.0 - etas[i], b) + c);
      rss += r * r;
    }
    return std::isfinite(rss) ? rss : kInf;
  };

  // variable projection over a grid of exponents for the starting point
  std::vector<double> f(etas.size());
  double best_rss = kInf;
  std::vector<double> start{0.0, 1.0, 0.0};
  for (double b = 0.05; b <= 4.0; b += 0.05) {
    for (std::size_t i = 0; i < etas.size(); ++i) f[i] = std::pow(1.0 - etas[i], -b);
    double a = 0.0, c = 0.0;
    const double rss = affine_fit(f, taus, a, c);
    if (rss < best_rss) {
      best_rss = rss;
      start = {a, b, c};
    }
  }
  const SimplexResult r =
      minimize_simplex([&](std::span<const double> v) { return model_rss(v[0], v[1], v[2]); }, start);
  PowerLawFit fit{r.x[0], r.x[1], r.x[2], r.value, 0.0};
  fit.r2 = coefficient_of_determination(taus, fit.rss);
  return fit;
}

ExpDecayFit fit_tau_vs_p(std::span<const double> ps, std::span<const double> taus) {
  if (ps.size() != taus.size()) throw std::invalid_argument("fit_tau_vs_p: length mismatch");
  if (ps.size() < 4) throw std::invalid_argument("fit_tau_vs_p: need at least 4 points");
  for (double p : ps) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("fit_tau_vs_p: p must lie in (0, 1]");
  }
  const auto model_rss = [&](double c, double d, double e) {
    double rss = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double r = taus[i] - (c * std::exp(-d * ps[i]) + e);
      rss += r * r;
    }
    return std::isfinite(rss) ? rss : kInf;
  };

  std::vector<double> f(ps.size());
  double best_rss = kInf;
  std::vector<double> start{0.0, 1.0, 0.0};
  for (double d = 0.1; d <= 40.0; d += 0.1) {
    for (std::size_t i = 0; i < ps.size(); ++i) f[i] = std::exp(-d * ps[i]);
    double c = 0.0, e = 0.0;
    const double rss = affine_fit(f, taus, c, e);
    if (rss < best_rss) {
      best_rss = rss;
      start = {c, d, e};
    }
  }
  const SimplexResult r =
      minimize_simplex([&](std::span<const double> v) { return model_rss(v[0], v[1], v[2]); }, start);
  ExpDecayFit fit{r.x[0], r.x[1], r.x[2], r.value, 0.0};
  fit.r2 = coefficient_of_determination(taus, fit.rss);
  return fit;
}

}  // namespace postwalk
