#pragma once

// Least-squares fits used by the decay diagnostics. Every fit reports the
// sample range and R^2 alongside its parameters.

#include "maslag/error.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace maslag {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
    int samples = 0;
};

/// Ordinary least squares y = intercept + slope x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DiagnosticError("fit_line: size mismatch");
    const int n = int(x.size());
    if (n < 2) throw DiagnosticError("fit_line: need at least 2 samples");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DiagnosticError("fit_line: abscissae are all equal");
    LineFit f;
    f.samples = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : std::numeric_limits<double>::infinity();
    return f;
}

/// y = constant * x^exponent, fitted in log-log coordinates.
struct PowerFit {
    double exponent = 0.0;
    double constant = 0.0;
    double r2 = 0.0;
    double x_min = 0.0, x_max = 0.0;
    int samples = 0;
};

/// Samples with non-positive x or y are dropped.
inline PowerFit fit_power(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    PowerFit p;
    p.x_min = std::numeric_limits<double>::infinity();
    p.x_max = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        p.x_min = std::min(p.x_min, x[i]);
        p.x_max = std::max(p.x_max, x[i]);
    }
    const LineFit f = fit_line(lx, ly);
    p.exponent = f.slope;
    p.constant = std::exp(f.intercept);
    p.r2 = f.r2;
    p.samples = f.samples;
    return p;
}

/// y = constant * exp(-rate x), fitted in log-linear coordinates.
struct ExponentialFit {
    double rate = 0.0;
    double constant = 0.0;
    double r2 = 0.0;
    /// rate - 2 standard errors.
    double rate_lower = 0.0;
    double x_min = 0.0, x_max = 0.0;
    int samples = 0;
};

inline ExponentialFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> xs, ly;
    ExponentialFit e;
    e.x_min = std::numeric_limits<double>::infinity();
    e.x_max = -e.x_min;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0.0)) continue;
        xs.push_back(x[i]);
        ly.push_back(std::log(y[i]));
        e.x_min = std::min(e.x_min, x[i]);
        e.x_max = std::max(e.x_max, x[i]);
    }
    const LineFit f = fit_line(xs, ly);
    e.rate = -f.slope;
    e.constant = std::exp(f.intercept);
    e.r2 = f.r2;
    e.rate_lower = e.rate - 2.0 * f.slope_stderr;
    e.samples = f.samples;
    return e;
}

inline nlohmann::json to_json(const PowerFit& p) {
    return {{"exponent", p.exponent}, {"constant", p.constant}, {"r2", p.r2},
            {"range", {p.x_min, p.x_max}}, {"samples", p.samples}};
}

inline nlohmann::json to_json(const ExponentialFit& e) {
    return {{"rate", e.rate},   {"constant", e.constant},   {"r2", e.r2},
            {"rate_lower", e.rate_lower}, {"range", {e.x_min, e.x_max}}, {"samples", e.samples}};
}

} // namespace maslag
