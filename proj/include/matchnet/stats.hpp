#ifndef MATCHNET_STATS_HPP
#define MATCHNET_STATS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "matchnet/engine.hpp"
#include "matchnet/errors.hpp"

namespace matchnet {

struct BatchMeans {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> batches;
};

/// Batch-means estimate of the long-run time average of a piecewise-constant path:
/// [start, end] is cut into `n_batches` equal windows and the spread of the window
/// averages gives the standard error.
template <class T>
BatchMeans batch_means(const std::vector<double>& times, const std::vector<T>& path, double start, double end,
                       std::size_t n_batches)
{
    if (n_batches < 2) {
        throw InputError("batch means needs at least two batches");
    }
    BatchMeans out;
    const double width = (end - start) / static_cast<double>(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        const double lo = start + width * static_cast<double>(b);
        out.batches.push_back(time_average(times, path, lo, lo + width));
    }
    double sum = 0.0;
    for (double v : out.batches) {
        sum += v;
    }
    out.mean = sum / static_cast<double>(n_batches);
    double ss = 0.0;
    for (double v : out.batches) {
        ss += (v - out.mean) * (v - out.mean);
    }
    out.std_error = std::sqrt(ss / static_cast<double>(n_batches - 1) / static_cast<double>(n_batches));
    return out;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y ~ intercept + slope * x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("least_squares needs two equally sized samples of length >= 2");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace matchnet

#endif  // MATCHNET_STATS_HPP
