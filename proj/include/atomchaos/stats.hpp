// Copyright 2026 The atomchaos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "atomchaos/params.hpp"

namespace atomchaos {

// Pairwise (cascade) summation; deterministic for a fixed input order.
inline double pairwise_sum(std::span<const double> v)
{
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) {
            s += x;
        }
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;  // from residuals; meaningless for correlated samples
    std::size_t n = 0;
};

// Ordinary least squares y = intercept + slope * x (optionally weighted).
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys,
                            std::span<const double> weights = {})
{
    if (xs.size() != ys.size() || (!weights.empty() && weights.size() != xs.size())) {
        throw Error("linear_fit: size mismatch");
    }
    if (xs.size() < 2) {
        throw Error("linear_fit: need at least two points");
    }
    const std::size_t n = xs.size();
    auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
    double sw = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w(i);
        mx += w(i) * xs[i];
        my += w(i) * ys[i];
    }
    mx /= sw;
    my /= sw;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w(i) * (xs[i] - mx) * (xs[i] - mx);
        sxy += w(i) * (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw Error("linear_fit: degenerate abscissae");
    }
    LinearFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - fit.intercept - fit.slope * xs[i];
            rss += w(i) * r * r;
        }
        fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

// Slope of log(y) against log(x) over the points with y > 0. When standard
// errors are given the fit is weighted by (y / stderr)^2, the inverse
// variance of log(y).
inline LinearFit loglog_fit(std::span<const double> xs, std::span<const double> ys,
                            std::span<const double> stderrs = {})
{
    std::vector<double> lx;
    std::vector<double> ly;
    std::vector<double> w;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ys[i] > 0.0 && xs[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
            if (!stderrs.empty()) {
                const double rel = stderrs[i] / ys[i];
                w.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
            }
        }
    }
    return linear_fit(lx, ly, w);
}

// Sample mean and standard error of the mean.
struct MeanError {
    double mean = 0.0;
    double sem = 0.0;  // standard error of the mean
};

inline MeanError mean_and_error(std::span<const double> v)
{
    if (v.empty()) {
        return {};
    }
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        sq[i] = (v[i] - mean) * (v[i] - mean);
    }
    const double var = v.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

}  // namespace atomchaos
