#pragma once

// Sweep traces and window-width extraction: moving-average denoise, the
// differential (derivative-extrema) method, and FWHM for cross-checks.

#include "camsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace camsim {

struct TraceMeta {
    std::string variant;
    double m1 = 0.0;      // ohm
    double m2 = 0.0;      // ohm
    double supply = 0.0;  // V

    bool operator==(const TraceMeta&) const = default;
};

/// Ordered (input voltage, output current) samples from one sweep.
struct Trace {
    std::vector<double> x;  // V
    std::vector<double> y;  // A
    TraceMeta meta;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
};

struct WindowMetrics {
    double lower_threshold = 0.0;  // V
    double upper_threshold = 0.0;  // V
    double width = 0.0;            // V, upper - lower
    double peak_current = 0.0;     // A
};

namespace detail {

inline void check_trace(const Trace& t) {
    if (t.x.size() < 2 || t.x.size() != t.y.size())
        raise(Errc::DegenerateTrace, "trace needs >= 2 equal-length samples");
    for (std::size_t i = 1; i < t.x.size(); ++i)
        if (!(t.x[i] > t.x[i - 1]))
            raise(Errc::DegenerateTrace, "trace x must be strictly increasing");
}

inline double uniform_pitch(const Trace& t) {
    const double pitch = (t.x.back() - t.x.front()) / static_cast<double>(t.x.size() - 1);
    for (std::size_t i = 1; i < t.x.size(); ++i) {
        const double d = t.x[i] - t.x[i - 1];
        if (std::fabs(d - pitch) > 1e-9 * std::max(1.0, std::fabs(pitch)) + 1e-15)
            raise(Errc::NonUniformPitch, "trace is not uniformly sampled");
    }
    return pitch;
}

}  // namespace detail

/// Centered moving average; edge windows shrink to what is available.
inline Trace moving_average(const Trace& t, int window = 50) {
    detail::check_trace(t);
    const int n = static_cast<int>(t.x.size());
    if (window < 1) raise(Errc::Precondition, "window must be >= 1");
    if (window > n) raise(Errc::WindowTooLarge, "window exceeds trace length");
    Trace out = t;
    const int lo_half = (window - 1) / 2;
    const int hi_half = window / 2;
    // prefix sums keep this O(n)
    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) prefix[static_cast<std::size_t>(i) + 1] =
        prefix[static_cast<std::size_t>(i)] + t.y[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) {
        const int a = std::max(0, i - lo_half);
        const int b = std::min(n - 1, i + hi_half);
        out.y[static_cast<std::size_t>(i)] =
            (prefix[static_cast<std::size_t>(b) + 1] - prefix[static_cast<std::size_t>(a)]) /
            static_cast<double>(b - a + 1);
    }
    return out;
}

/// Central-difference dy/dx; one-sided at the two ends.
inline std::vector<double> derivative(const Trace& t) {
    detail::check_trace(t);
    const std::size_t n = t.x.size();
    std::vector<double> d(n);
    d[0] = (t.y[1] - t.y[0]) / (t.x[1] - t.x[0]);
    d[n - 1] = (t.y[n - 1] - t.y[n - 2]) / (t.x[n - 1] - t.x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        d[i] = (t.y[i + 1] - t.y[i - 1]) / (t.x[i + 1] - t.x[i - 1]);
    return d;
}

/// Differential window method: denoise, differentiate, take the input
/// positions of the derivative extrema. Ties break toward smaller x; the
/// two positions are ordered so lower <= upper.
inline WindowMetrics window_metrics(const Trace& t, int window = 50) {
    detail::check_trace(t);
    detail::uniform_pitch(t);
    const Trace sm = moving_average(t, window);
    const std::vector<double> d = derivative(sm);

    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (d[i] > d[imax]) imax = i;
        if (d[i] < d[imin]) imin = i;
    }
    if (d[imax] == d[imin])
        raise(Errc::DegenerateTrace, "flat trace: derivative has no extrema");

    WindowMetrics m;
    m.lower_threshold = std::min(t.x[imax], t.x[imin]);
    m.upper_threshold = std::max(t.x[imax], t.x[imin]);
    m.width = m.upper_threshold - m.lower_threshold;
    m.peak_current = *std::max_element(sm.y.begin(), sm.y.end());
    return m;
}

/// Full width at half maximum on the denoised trace; thresholds at the
/// outermost half-peak crossings (linearly interpolated).
inline WindowMetrics fwhm_metrics(const Trace& t, int window = 50) {
    detail::check_trace(t);
    const Trace sm = moving_average(t, window);
    const double peak = *std::max_element(sm.y.begin(), sm.y.end());
    if (!(peak > 0.0)) raise(Errc::DegenerateTrace, "fwhm needs a positive peak");
    const double half = 0.5 * peak;

    const std::size_t n = sm.y.size();
    double lo = sm.x.front();
    double hi = sm.x.back();
    bool found_lo = false, found_hi = false;
    for (std::size_t i = 1; i < n; ++i) {
        if (!found_lo && sm.y[i - 1] < half && sm.y[i] >= half) {
            const double f = (half - sm.y[i - 1]) / (sm.y[i] - sm.y[i - 1]);
            lo = sm.x[i - 1] + f * (sm.x[i] - sm.x[i - 1]);
            found_lo = true;
            break;
        }
    }
    for (std::size_t i = n - 1; i >= 1; --i) {
        if (sm.y[i] < half && sm.y[i - 1] >= half) {
            const double f = (half - sm.y[i - 1]) / (sm.y[i] - sm.y[i - 1]);
            hi = sm.x[i - 1] + f * (sm.x[i] - sm.x[i - 1]);
            found_hi = true;
            break;
        }
        if (i == 1) break;
    }
    if (!found_lo && !found_hi && sm.y.front() < half && sm.y.back() < half)
        raise(Errc::DegenerateTrace, "no half-peak crossing found");

    WindowMetrics m;
    m.lower_threshold = lo;
    m.upper_threshold = hi;
    m.width = hi - lo;
    m.peak_current = peak;
    return m;
}

}  // namespace camsim
