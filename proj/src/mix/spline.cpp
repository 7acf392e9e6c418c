#include "datamix/mix/spline.hpp"

#include <algorithm>
#include <cmath>

#include "datamix/common/error.hpp"

namespace datamix::mix {

CubicSpline CubicSpline::fit(std::span<const Knot> knots) {
    const std::size_t n = knots.size();
    if (n < 4) {
        throw Error("insufficient_observations",
                    "cubic spline needs at least 4 observations, got " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Knot& k = knots[i];
        if (!std::isfinite(k.step)) throw Error("unsorted_steps", "non-finite step");
        if (!std::isfinite(k.perplexity) || k.perplexity <= 0.0) {
            throw Error("bad_perplexity", "perplexity must be finite and positive at step " + std::to_string(k.step));
        }
        if (i > 0 && !(k.step > knots[i - 1].step)) {
            throw Error("unsorted_steps", "steps must be strictly increasing (step " + std::to_string(k.step) +
                                              " follows " + std::to_string(knots[i - 1].step) + ")");
        }
    }

    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = knots[i + 1].step - knots[i].step;

    // Second derivatives M_i from the tridiagonal system with M_0 = M_{n-1} = 0:
    //   h_{i-1} M_{i-1} + 2 (h_{i-1} + h_i) M_i + h_i M_{i+1} = 6 (d_i - d_{i-1})
    // where d_i is the slope of segment i. Solved with the Thomas algorithm.
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = j + 1;
        const double d_prev = (knots[i].perplexity - knots[i - 1].perplexity) / h[i - 1];
        const double d_next = (knots[i + 1].perplexity - knots[i].perplexity) / h[i];
        diag[j] = 2.0 * (h[i - 1] + h[i]);
        upper[j] = h[i];
        rhs[j] = 6.0 * (d_next - d_prev);
    }
    for (std::size_t j = 1; j < m; ++j) {
        const double w = h[j] / diag[j - 1];  // sub-diagonal entry of row j is h_j
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    std::vector<double> M(n, 0.0);
    for (std::size_t j = m; j-- > 0;) {
        const double next = j + 1 < m ? M[j + 2] : 0.0;
        M[j + 1] = (rhs[j] - upper[j] * next) / diag[j];
    }

    CubicSpline spline;
    spline.knots_.assign(knots.begin(), knots.end());
    spline.segments_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double hi = h[i];
        const double y0 = knots[i].perplexity;
        const double y1 = knots[i + 1].perplexity;
        const double h2 = hi * hi;
        Segment& seg = spline.segments_[i];
        seg.x0 = knots[i].step;
        seg.h = hi;
        seg.c0 = y0;
        seg.c1 = (y1 - y0) - h2 * (2.0 * M[i] + M[i + 1]) / 6.0;
        seg.c2 = h2 * M[i] / 2.0;
        seg.c3 = h2 * (M[i + 1] - M[i]) / 6.0;
    }
    return spline;
}

std::size_t CubicSpline::segment_index(double s) const {
    if (s <= knots_.front().step) return 0;
    if (s >= knots_.back().step) return segments_.size() - 1;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                               [](double v, const Knot& k) { return v < k.step; });
    return static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
}

double CubicSpline::evaluate(double s) const {
    const std::size_t i = segment_index(s);
    const Segment& g = segments_[i];
    // Exact knot values at the segment ends.
    if (s == knots_[i + 1].step) return knots_[i + 1].perplexity;
    const double t = (s - g.x0) / g.h;
    return g.c0 + t * (g.c1 + t * (g.c2 + t * g.c3));
}

double CubicSpline::derivative(double s) const {
    const Segment& g = segments_[segment_index(s)];
    const double t = (s - g.x0) / g.h;
    return (g.c1 + t * (2.0 * g.c2 + t * 3.0 * g.c3)) / g.h;
}

double CubicSpline::second_derivative(double s) const {
    const Segment& g = segments_[segment_index(s)];
    const double t = (s - g.x0) / g.h;
    return (2.0 * g.c2 + 6.0 * g.c3 * t) / (g.h * g.h);
}

double CubicSpline::second_derivative_left(std::size_t k) const {
    const Segment& g = segments_.at(k - 1);
    return (2.0 * g.c2 + 6.0 * g.c3) / (g.h * g.h);
}

double CubicSpline::second_derivative_right(std::size_t k) const {
    const Segment& g = segments_.at(k);
    return 2.0 * g.c2 / (g.h * g.h);
}

CurveMinimum CubicSpline::minimum() const {
    CurveMinimum best{knots_.front().step, knots_.front().perplexity};
    auto consider = [&](double s, double p) {
        if (p < best.perplexity || (p == best.perplexity && s < best.step)) best = {s, p};
    };
    for (const Knot& k : knots_) consider(k.step, k.perplexity);

    for (const Segment& g : segments_) {
        // y'(t) = c1 + 2 c2 t + 3 c3 t^2; roots strictly inside (0, 1).
        const double a = 3.0 * g.c3;
        const double b = 2.0 * g.c2;
        const double c = g.c1;
        double roots[2];
        int count = 0;
        const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
        if (scale == 0.0) continue;  // flat segment; its ends are knots
        if (std::abs(a) <= 1e-14 * scale) {
            if (b != 0.0) roots[count++] = -c / b;
        } else {
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                // Numerically stable quadratic roots.
                const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
                if (q != 0.0) {
                    roots[count++] = q / a;
                    roots[count++] = c / q;
                } else {
                    roots[count++] = 0.0;
                }
            }
        }
        for (int r = 0; r < count; ++r) {
            const double t = roots[r];
            if (!(t > 0.0 && t < 1.0)) continue;
            const double p = g.c0 + t * (g.c1 + t * (g.c2 + t * g.c3));
            consider(g.x0 + t * g.h, p);
        }
    }
    return best;
}

}  // namespace datamix::mix
