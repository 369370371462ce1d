#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cabin {

struct SampleSeries {
  std::string variable;
  std::vector<double> values;
  std::string unit;
};

/// Kernel density estimate sampled on a uniform grid.
struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  std::size_t sample_count = 0;
};

/// One term a * exp(-((x - b) / c)^2) of a sum-of-Gaussians density.
struct GaussianTerm {
  double a = 1.0;  // amplitude
  double b = 0.0;  // mean
  double c = 1.0;  // width

  double operator()(double x) const {
    const double z = (x - b) / c;
    return a * std::exp(-z * z);
  }
  bool operator==(const GaussianTerm&) const = default;
};

struct MixtureFit {
  std::vector<GaussianTerm> terms;
  double rmse = 0.0;
};

/// A per-variable set of discrete values. Term i is discrete label i; terms
/// are kept sorted by mean.
struct DiscretizationScheme {
  std::string variable;
  std::string unit;
  std::vector<GaussianTerm> terms;
  bool normalized = false;
  bool degenerate = false;  // single value assigned without fitting
  double epsilon = 0.05;
  int k_max = 6;

  int size() const { return static_cast<int>(terms.size()); }
  bool operator==(const DiscretizationScheme&) const = default;
};

struct DiscreteSeries {
  std::string variable;
  std::vector<int> labels;
};

struct DiscretizerOptions {
  int k_max = 6;
  double epsilon = 0.05;  // model-order slack on the minimum RMSE
  int grid_points = 256;
  int max_iterations = 200;
  double tolerance = 1e-8;
};

inline constexpr int kMinSamples = 8;

/// Gaussian-kernel density with Silverman's bandwidth on
/// [min - 3h, max + 3h]. Throws TooFewSamples, DegenerateSamples,
/// InvalidSamples.
DensityEstimate estimate_density(const SampleSeries& samples,
                                 int grid_points = 256);

/// Least-squares fit of k Gaussian terms to a density curve. Throws
/// FitDiverged when no candidate converges to finite parameters.
MixtureFit fit_mixture(const DensityEstimate& pd, int k,
                       const DiscretizerOptions& options = {});

/// Fits for k = 1..k_max in one pass. Each k is seeded both from a weighted
/// k-means of the density and from the k-1 solution plus one new term, so
/// the residual is non-increasing in k. Entry k-1 is empty if that order
/// diverged.
std::vector<std::optional<MixtureFit>> fit_mixture_path(
    const DensityEstimate& pd, int k_max,
    const DiscretizerOptions& options = {});

/// Root-mean-square standard error of the density estimate over its grid,
/// sqrt(mean f(x) / (n h 2 sqrt(pi))). Residuals below this level are
/// sampling noise.
double density_noise_floor(const DensityEstimate& pd);

/// Index of the selected order: the smallest k whose
/// rmse <= (1 + epsilon) * min_rmse + noise_floor.
int select_order(std::span<const std::optional<MixtureFit>> fits,
                 double epsilon, double noise_floor = 0.0);

/// Full discretization-scheme construction for one variable.
DiscretizationScheme build_scheme(const SampleSeries& samples,
                                  const DiscretizerOptions& options = {});

/// Same as build_scheme, but a constant variable yields a one-term scheme
/// flagged `degenerate` instead of throwing.
DiscretizationScheme build_scheme_or_constant(
    const SampleSeries& samples, const DiscretizerOptions& options = {});

std::vector<double> membership(const DiscretizationScheme& scheme, double x);

/// Label of the maximal-membership term; the lowest label wins ties.
int discretize_value(const DiscretizationScheme& scheme, double x);

DiscreteSeries discretize_series(const DiscretizationScheme& scheme,
                                 const SampleSeries& samples);

/// Mean of the term behind `label`. Throws LabelOutOfRange.
double label_to_value(const DiscretizationScheme& scheme, int label);

/// Evaluates the induced sum of terms at x.
double mixture_value(std::span<const GaussianTerm> terms, double x);

}  // namespace cabin
