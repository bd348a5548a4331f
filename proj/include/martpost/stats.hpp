#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "martpost/errors.hpp"
#include "martpost/linalg.hpp"

namespace martpost {

/// Linear-interpolation quantile (the common "type 7" convention): with
/// sorted values v_1..v_B and h = (B-1) q + 1, returns
/// v_floor(h) + (h - floor(h)) (v_{floor(h)+1} - v_floor(h)).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw DataError("quantile: no draws");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile: q must be in [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Equal-tailed credible interval from posterior draws.
inline Interval credible_interval(std::vector<double> draws, double level) {
    if (draws.empty()) throw DataError("credible_interval: no draws");
    if (!(level > 0.0 && level < 1.0))
        throw ConfigError("credible_interval: level must be in (0, 1)");
    std::sort(draws.begin(), draws.end());
    const double alpha = 0.5 * (1.0 - level);
    return {quantile_sorted(draws, alpha), quantile_sorted(draws, 1.0 - alpha), level};
}

inline Interval credible_interval(const Vec& draws, double level) {
    return credible_interval(std::vector<double>(draws.begin(), draws.end()), level);
}

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
};

inline SummaryStats summarize(const Vec& draws) {
    SummaryStats s;
    s.n = static_cast<std::size_t>(draws.size());
    if (s.n < 2) throw DataError("summarize: need at least 2 draws");
    s.mean = draws.mean();
    const auto c = draws.array() - s.mean;
    const double m2 = c.square().sum() / static_cast<double>(s.n);
    const double m3 = c.cube().sum() / static_cast<double>(s.n);
    s.sd = std::sqrt(c.square().sum() / (static_cast<double>(s.n) - 1.0));
    s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    return s;
}

/// Silverman's rule-of-thumb bandwidth 0.9 min(sd, IQR/1.34) B^{-1/5}.
/// Falls back to the sd when the IQR is zero; throws DataError when the
/// draws are degenerate (zero variance).
inline double silverman_bandwidth(const std::vector<double>& sorted) {
    const auto B = sorted.size();
    if (B < 2) throw DataError("kde: need at least 2 draws");
    double mean = 0.0;
    for (const double v : sorted) mean += v;
    mean /= static_cast<double>(B);
    double ss = 0.0;
    for (const double v : sorted) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (static_cast<double>(B) - 1.0));
    if (!(sd > 0.0)) throw DataError("kde: degenerate draws (zero variance)");
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(B), -0.2);
}

/// Gaussian-kernel density estimate of the draws, evaluated on `grid`.
inline Vec kde(const Vec& draws, const Vec& grid) {
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = silverman_bandwidth(sorted);
    const double norm =
        1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    Vec out(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (const double v : sorted) {
            const double u = (grid[g] - v) / h;
            acc += std::exp(-0.5 * u * u);
        }
        out[g] = norm * acc;
    }
    return out;
}

/// Evenly spaced evaluation grid covering the draws with 3 bandwidths of
/// margin on each side.
inline Vec kde_default_grid(const Vec& draws, int points = 512) {
    if (points < 2) throw ConfigError("kde: need at least 2 grid points");
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = silverman_bandwidth(sorted);
    const double lo = sorted.front() - 3.0 * h, hi = sorted.back() + 3.0 * h;
    Vec grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(points - 1);
    return grid;
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DataError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return d;
}

inline double ks_two_sample(const Vec& a, const Vec& b) {
    return ks_two_sample(std::vector<double>(a.begin(), a.end()),
                         std::vector<double>(b.begin(), b.end()));
}

}  // namespace martpost
