#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "errors.hpp"

namespace horam {

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t bins = 0;
  std::uint64_t samples = 0;
  double min_expected = 0.0;
};

inline std::size_t uniformity_bins(std::uint64_t cells, std::size_t max_bins = 64) {
  return static_cast<std::size_t>(std::min<std::uint64_t>(max_bins, cells));
}

/// Pearson test of indices in [0, cells) against the uniform distribution.
/// Index j falls in bin floor(j * bins / cells); expected counts follow the
/// bin widths when cells is not a multiple of bins.
inline ChiSquareResult chi_square_uniform(std::span<const std::uint64_t> samples, std::uint64_t cells,
                                          std::size_t max_bins = 64) {
  if (cells == 0) throw ParameterError("chi-square needs at least one cell");
  ChiSquareResult r;
  r.bins = uniformity_bins(cells, max_bins);
  r.samples = samples.size();
  if (r.bins < 2 || samples.empty()) return r;
  using U = unsigned __int128;
  std::vector<std::uint64_t> observed(r.bins, 0);
  for (auto j : samples) {
    if (j >= cells) throw ParameterError("sample outside the cell range");
    ++observed[static_cast<std::size_t>(U(j) * r.bins / cells)];
  }
  // first index of bin b is ceil(b * cells / bins)
  auto first = [&](std::size_t b) { return static_cast<std::uint64_t>((U(b) * cells + r.bins - 1) / r.bins); };
  const double n = static_cast<double>(samples.size());
  r.min_expected = n;
  for (std::size_t b = 0; b < r.bins; ++b) {
    const double width = static_cast<double>(first(b + 1) - first(b));
    const double e = n * width / static_cast<double>(cells);
    r.min_expected = std::min(r.min_expected, e);
    const double d = static_cast<double>(observed[b]) - e;
    r.statistic += d * d / e;
  }
  const boost::math::chi_squared dist(static_cast<double>(r.bins - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("least squares needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw ParameterError("least squares needs distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

struct GeometricTail {
  double beta = 1.0;      ///< exp(slope) of log S(k) against k
  double envelope = 1.0;  ///< smallest b with S(k) <= b^k for every fitted k
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Fits S(k) ~ beta^k over k = 1.. while S(k) * weight >= min_mass, where
/// survival[k] = S(k) and weight converts a probability into a sample count.
inline GeometricTail fit_geometric_tail(std::span<const double> survival, double weight, double min_mass = 10.0) {
  std::vector<double> ks, logs;
  GeometricTail t;
  t.envelope = 0.0;
  for (std::size_t k = 1; k < survival.size() && survival[k] * weight >= min_mass; ++k) {
    ks.push_back(static_cast<double>(k));
    logs.push_back(std::log(survival[k]));
    t.envelope = std::max(t.envelope, std::pow(survival[k], 1.0 / static_cast<double>(k)));
  }
  t.points = ks.size();
  if (t.points < 2) throw ParameterError("too few tail points to fit");
  const auto f = least_squares(ks, logs);
  t.beta = std::exp(f.slope);
  t.r2 = f.r2;
  return t;
}

/// Single constant c minimising squared log error of measured ~ c * model,
/// i.e. the geometric mean of the ratios.
inline double fit_constant(std::span<const double> measured, std::span<const double> model) {
  if (measured.size() != model.size() || measured.empty()) throw ParameterError("constant fit needs paired points");
  double s = 0;
  for (std::size_t i = 0; i < measured.size(); ++i) s += std::log(measured[i] / model[i]);
  return std::exp(s / static_cast<double>(measured.size()));
}

}  // namespace horam
