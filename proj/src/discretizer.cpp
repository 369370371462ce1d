#include "cabin/discretizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "cabin/errors.hpp"

namespace cabin {

namespace {

constexpr double kMinParam = 1e-9;

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

bool is_degenerate(const Moments& m) {
  return m.stddev < 1e-9 * std::abs(m.mean) + 1e-12;
}

void validate(const SampleSeries& samples) {
  if (samples.values.empty())
    throw TooFewSamples("variable '" + samples.variable + "' has no samples");
  for (double v : samples.values)
    if (!std::isfinite(v))
      throw InvalidSamples("variable '" + samples.variable +
                           "' has a non-finite sample");
}

double sum_squared_residuals(std::span<const GaussianTerm> terms,
                             std::span<const double> x,
                             std::span<const double> y) {
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = mixture_value(terms, x[i]) - y[i];
    sse += r * r;
  }
  return sse;
}

double rmse_of(std::span<const GaussianTerm> terms, std::span<const double> x,
               std::span<const double> y) {
  return std::sqrt(sum_squared_residuals(terms, x, y) /
                   static_cast<double>(x.size()));
}

bool all_finite(std::span<const GaussianTerm> terms) {
  return std::all_of(terms.begin(), terms.end(), [](const GaussianTerm& t) {
    return std::isfinite(t.a) && std::isfinite(t.b) && std::isfinite(t.c);
  });
}

std::vector<GaussianTerm> unpack(const Eigen::VectorXd& p) {
  std::vector<GaussianTerm> terms(static_cast<std::size_t>(p.size() / 3));
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(3 * i);
    terms[i] = {p[j], p[j + 1], p[j + 2]};
  }
  return terms;
}

Eigen::VectorXd pack(std::span<const GaussianTerm> terms) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(3 * terms.size()));
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(3 * i);
    p[j] = terms[i].a;
    p[j + 1] = terms[i].b;
    p[j + 2] = terms[i].c;
  }
  return p;
}

void clamp_bounds(Eigen::VectorXd& p) {
  for (Eigen::Index j = 0; j < p.size(); j += 3) {
    p[j] = std::max(p[j], kMinParam);
    p[j + 2] = std::max(p[j + 2], kMinParam);
  }
}

// Levenberg-Marquardt with Marquardt diagonal scaling and bound clamping.
std::optional<MixtureFit> refine(std::vector<GaussianTerm> init,
                                 std::span<const double> x,
                                 std::span<const double> y,
                                 const DiscretizerOptions& options) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd p = pack(init);
  clamp_bounds(p);
  const Eigen::Index np = p.size();

  Eigen::MatrixXd jac(n, np);
  Eigen::VectorXd res(n);
  auto linearize = [&](const Eigen::VectorXd& q) {
    res.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < np; j += 3) {
        const double a = q[j], b = q[j + 1], c = q[j + 2];
        const double d = x[static_cast<std::size_t>(i)] - b;
        const double e = std::exp(-(d * d) / (c * c));
        res[i] += a * e;
        jac(i, j) = e;
        jac(i, j + 1) = a * e * 2.0 * d / (c * c);
        jac(i, j + 2) = a * e * 2.0 * d * d / (c * c * c);
      }
      res[i] -= y[static_cast<std::size_t>(i)];
    }
  };

  auto sse_at = [&](const Eigen::VectorXd& q) {
    const auto terms = unpack(q);
    return sum_squared_residuals(terms, x, y);
  };

  double sse = sse_at(p);
  if (!std::isfinite(sse)) return std::nullopt;
  double lambda = 1e-3;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    linearize(p);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * res;

    bool accepted = false;
    bool converged = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index j = 0; j < np; ++j)
        a(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      Eigen::VectorXd step = a.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd candidate = p + step;
      clamp_bounds(candidate);
      const double cand_sse = sse_at(candidate);
      if (std::isfinite(cand_sse) && cand_sse < sse) {
        const double moved = (candidate - p).norm();
        converged = moved <= options.tolerance * (p.norm() + options.tolerance);
        p = std::move(candidate);
        sse = cand_sse;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || converged) break;
  }

  auto terms = unpack(p);
  if (!all_finite(terms) || !std::isfinite(sse)) return std::nullopt;
  std::sort(terms.begin(), terms.end(),
            [](const GaussianTerm& l, const GaussianTerm& r) { return l.b < r.b; });
  return MixtureFit{std::move(terms), std::sqrt(sse / static_cast<double>(n))};
}

// Weighted 1-D k-means over the density curve; clusters seed one term each.
std::vector<GaussianTerm> kmeans_seed(const DensityEstimate& pd, int k) {
  const auto& x = pd.grid;
  const auto& w = pd.density;
  const std::size_t n = x.size();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const double dx = (x.back() - x.front()) / static_cast<double>(n - 1);

  std::vector<double> centers(static_cast<std::size_t>(k));
  {
    double cum = 0.0;
    std::size_t i = 0;
    for (int c = 0; c < k; ++c) {
      const double target = total * (c + 0.5) / k;
      while (i + 1 < n && cum + w[i] < target) cum += w[i++];
      centers[static_cast<std::size_t>(c)] = x[i];
    }
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (std::abs(x[i] - centers[static_cast<std::size_t>(c)]) <
            std::abs(x[i] - centers[static_cast<std::size_t>(best)]))
          best = c;
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      double sw = 0.0, swx = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == c) {
          sw += w[i];
          swx += w[i] * x[i];
        }
      if (sw > 0.0) centers[static_cast<std::size_t>(c)] = swx / sw;
    }
  }

  std::vector<GaussianTerm> terms(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    double sw = 0.0, swd = 0.0, peak = 0.0;
    const double m = centers[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < n; ++i)
      if (assign[i] == c) {
        sw += w[i];
        swd += w[i] * (x[i] - m) * (x[i] - m);
        peak = std::max(peak, w[i]);
      }
    const double sd = sw > 0.0 ? std::sqrt(swd / sw) : dx;
    terms[static_cast<std::size_t>(c)] = {std::max(peak, kMinParam), m,
                                          std::max(sd, dx) * std::numbers::sqrt2};
  }
  return terms;
}

// Previous solution plus one narrow term at the largest positive residual.
std::vector<GaussianTerm> nested_seed(const DensityEstimate& pd,
                                      const std::vector<GaussianTerm>& prev,
                                      double amplitude_scale) {
  const auto& x = pd.grid;
  const auto& y = pd.density;
  std::size_t best = 0;
  double best_res = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - mixture_value(prev, x[i]);
    if (r > best_res) {
      best_res = r;
      best = i;
    }
  }
  const double dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  auto terms = prev;
  terms.push_back({std::max(amplitude_scale * best_res, kMinParam), x[best], 2.0 * dx});
  return terms;
}

// A term that loses the maximal-membership contest at its own mean can never
// be recovered from its value, so it is not a usable discrete value. Remove
// such terms one at a time, smallest amplitude first.
void drop_shadowed_terms(DiscretizationScheme& scheme) {
  for (;;) {
    int victim = -1;
    for (int j = 0; j < scheme.size(); ++j) {
      if (discretize_value(scheme, scheme.terms[static_cast<std::size_t>(j)].b) == j)
        continue;
      if (victim < 0 || scheme.terms[static_cast<std::size_t>(j)].a <
                            scheme.terms[static_cast<std::size_t>(victim)].a)
        victim = j;
    }
    if (victim < 0) return;
    scheme.terms.erase(scheme.terms.begin() + victim);
  }
}

}  // namespace

double mixture_value(std::span<const GaussianTerm> terms, double x) {
  double f = 0.0;
  for (const auto& t : terms) f += t(x);
  return f;
}

DensityEstimate estimate_density(const SampleSeries& samples, int grid_points) {
  validate(samples);
  if (samples.values.size() < static_cast<std::size_t>(kMinSamples))
    throw TooFewSamples("variable '" + samples.variable + "' needs at least " +
                        std::to_string(kMinSamples) + " samples");
  if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");

  const Moments m = moments(samples.values);
  if (is_degenerate(m))
    throw DegenerateSamples("variable '" + samples.variable + "' is constant");

  std::vector<double> sorted = samples.values;
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = m.stddev;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  const auto n = static_cast<double>(sorted.size());
  const double h = 0.9 * spread * std::pow(n, -0.2);

  DensityEstimate pd;
  pd.bandwidth = h;
  pd.sample_count = sorted.size();
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  pd.grid.resize(static_cast<std::size_t>(grid_points));
  pd.density.assign(static_cast<std::size_t>(grid_points), 0.0);
  for (int i = 0; i < grid_points; ++i)
    pd.grid[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);

  // Samples are sorted, so only those within 8h of a grid point contribute.
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  const double reach = 8.0 * h;
  for (std::size_t g = 0; g < pd.grid.size(); ++g) {
    const double xg = pd.grid[g];
    auto first = std::lower_bound(sorted.begin(), sorted.end(), xg - reach);
    auto last = std::upper_bound(first, sorted.end(), xg + reach);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (xg - *it) / h;
      acc += std::exp(-0.5 * z * z);
    }
    pd.density[g] = acc * norm;
  }
  return pd;
}

std::vector<std::optional<MixtureFit>> fit_mixture_path(
    const DensityEstimate& pd, int k_max, const DiscretizerOptions& options) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  if (pd.grid.size() < static_cast<std::size_t>(4 * k_max) ||
      pd.grid.size() != pd.density.size())
    throw std::invalid_argument("density grid needs at least 4k points");

  const std::span<const double> x(pd.grid);
  const std::span<const double> y(pd.density);
  std::vector<std::optional<MixtureFit>> path;
  path.reserve(static_cast<std::size_t>(k_max));

  for (int k = 1; k <= k_max; ++k) {
    std::optional<MixtureFit> best = refine(kmeans_seed(pd, k), x, y, options);
    const auto& prev = path.empty() ? std::optional<MixtureFit>{} : path.back();
    if (prev) {
      auto consider = [&](std::optional<MixtureFit> cand) {
        if (cand && (!best || cand->rmse < best->rmse)) best = std::move(cand);
      };
      consider(refine(nested_seed(pd, prev->terms, 0.5), x, y, options));
      // The unrefined extension keeps the residual path non-increasing.
      auto extended = nested_seed(pd, prev->terms, 0.0);
      const double ext_rmse = rmse_of(extended, x, y);
      std::sort(extended.begin(), extended.end(),
                [](const GaussianTerm& l, const GaussianTerm& r) { return l.b < r.b; });
      consider(MixtureFit{std::move(extended), ext_rmse});
    }
    path.push_back(std::move(best));
  }
  return path;
}

MixtureFit fit_mixture(const DensityEstimate& pd, int k,
                       const DiscretizerOptions& options) {
  if (k > options.k_max)
    throw std::invalid_argument("k exceeds k_max");
  auto path = fit_mixture_path(pd, k, options);
  if (!path.back())
    throw FitDiverged("mixture fit with " + std::to_string(k) + " terms diverged");
  return *path.back();
}

double density_noise_floor(const DensityEstimate& pd) {
  if (pd.sample_count == 0 || pd.bandwidth <= 0.0 || pd.density.empty()) return 0.0;
  const double mean_f = std::accumulate(pd.density.begin(), pd.density.end(), 0.0) /
                        static_cast<double>(pd.density.size());
  return std::sqrt(mean_f / (static_cast<double>(pd.sample_count) * pd.bandwidth * 2.0 *
                             std::sqrt(std::numbers::pi)));
}

int select_order(std::span<const std::optional<MixtureFit>> fits, double epsilon,
                 double noise_floor) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : fits)
    if (f) best = std::min(best, f->rmse);
  if (!std::isfinite(best)) throw NoValidFit("every mixture order diverged");
  for (std::size_t i = 0; i < fits.size(); ++i)
    if (fits[i] && fits[i]->rmse <= (1.0 + epsilon) * best + noise_floor)
      return static_cast<int>(i);
  throw NoValidFit("every mixture order diverged");
}

DiscretizationScheme build_scheme(const SampleSeries& samples,
                                  const DiscretizerOptions& options) {
  const DensityEstimate pd = estimate_density(samples, options.grid_points);
  const auto path = fit_mixture_path(pd, options.k_max, options);
  const int chosen = select_order(path, options.epsilon, density_noise_floor(pd));

  DiscretizationScheme scheme;
  scheme.variable = samples.variable;
  scheme.unit = samples.unit;
  scheme.epsilon = options.epsilon;
  scheme.k_max = options.k_max;
  scheme.terms = path[static_cast<std::size_t>(chosen)]->terms;

  std::stable_sort(scheme.terms.begin(), scheme.terms.end(),
                   [](const GaussianTerm& l, const GaussianTerm& r) { return l.b < r.b; });
  drop_shadowed_terms(scheme);

  double a_max = 0.0;
  for (const auto& t : scheme.terms) a_max = std::max(a_max, t.a);
  for (auto& t : scheme.terms) t.a /= a_max;
  scheme.normalized = true;
  return scheme;
}

DiscretizationScheme build_scheme_or_constant(const SampleSeries& samples,
                                              const DiscretizerOptions& options) {
  try {
    return build_scheme(samples, options);
  } catch (const DegenerateSamples&) {
    const Moments m = moments(samples.values);
    DiscretizationScheme scheme;
    scheme.variable = samples.variable;
    scheme.unit = samples.unit;
    scheme.epsilon = options.epsilon;
    scheme.k_max = options.k_max;
    scheme.terms = {{1.0, m.mean, std::max(1e-6 * std::abs(m.mean), kMinParam)}};
    scheme.normalized = true;
    scheme.degenerate = true;
    return scheme;
  }
}

std::vector<double> membership(const DiscretizationScheme& scheme, double x) {
  std::vector<double> out;
  out.reserve(scheme.terms.size());
  for (const auto& t : scheme.terms) out.push_back(t(x));
  return out;
}

int discretize_value(const DiscretizationScheme& scheme, double x) {
  if (scheme.terms.empty()) throw LabelOutOfRange("scheme has no terms");
  // Compare in log space so far-tail samples, whose memberships underflow
  // to zero, still go to the dominant term.
  int best = 0;
  double best_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scheme.terms.size(); ++i) {
    const auto& t = scheme.terms[i];
    const double z = (x - t.b) / t.c;
    const double log_m = std::log(t.a) - z * z;
    if (log_m > best_log) {
      best_log = log_m;
      best = static_cast<int>(i);
    }
  }
  return best;
}

DiscreteSeries discretize_series(const DiscretizationScheme& scheme,
                                 const SampleSeries& samples) {
  DiscreteSeries out{samples.variable, {}};
  out.labels.reserve(samples.values.size());
  for (double v : samples.values) out.labels.push_back(discretize_value(scheme, v));
  return out;
}

double label_to_value(const DiscretizationScheme& scheme, int label) {
  if (label < 0 || label >= scheme.size())
    throw LabelOutOfRange("label " + std::to_string(label) + " out of range for '" +
                          scheme.variable + "' with " +
                          std::to_string(scheme.size()) + " values");
  return scheme.terms[static_cast<std::size_t>(label)].b;
}

}  // namespace cabin
