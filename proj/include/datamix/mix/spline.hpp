#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace datamix::mix {

struct Knot {
    double step;
    double perplexity;
};

struct CurveMinimum {
    double step;
    double perplexity;
};

// Natural cubic spline through (step, perplexity) knots.
//
// Segment k covers [x_k, x_{k+1}] with h_k = x_{k+1} - x_k and is stored in
// the local coordinate t = (s - x_k) / h_k in [0, 1]:
//
//   y(t) = c0 + c1 t + c2 t^2 + c3 t^3
//
// so knot values are reproduced exactly at t = 0 and the coefficients stay
// well-scaled for step counts in the tens of thousands.
class CubicSpline {
public:
    struct Segment {
        double x0;
        double h;
        double c0, c1, c2, c3;
    };

    // Errors: "insufficient_observations" for fewer than 4 knots,
    // "unsorted_steps" for non-increasing steps, "bad_perplexity" for
    // non-finite or non-positive values.
    static CubicSpline fit(std::span<const Knot> knots);

    double evaluate(double s) const;
    double derivative(double s) const;
    double second_derivative(double s) const;

    // Left- and right-hand second derivatives at interior knot k (1..n-2).
    double second_derivative_left(std::size_t k) const;
    double second_derivative_right(std::size_t k) const;

    // Global minimum over [first step, last step]. Candidates are the knots
    // and the roots of each segment's quadratic derivative; ties go to the
    // smallest step.
    CurveMinimum minimum() const;

    double domain_begin() const { return knots_.front().step; }
    double domain_end() const { return knots_.back().step; }
    const std::vector<Knot>& knots() const { return knots_; }
    const std::vector<Segment>& segments() const { return segments_; }

private:
    std::size_t segment_index(double s) const;

    std::vector<Knot> knots_;
    std::vector<Segment> segments_;
};

}  // namespace datamix::mix
