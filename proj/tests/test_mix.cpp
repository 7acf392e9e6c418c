#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "datamix/common/error.hpp"
#include "datamix/mix/mixer.hpp"
#include "datamix/mix/spline.hpp"
#include "doctest.h"

using namespace datamix;
using namespace datamix::mix;

namespace {

template <typename Fn>
std::string error_code(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

std::vector<Knot> knots_of(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<Knot> k;
    for (std::size_t i = 0; i < xs.size(); ++i) k.push_back({xs[i], ys[i]});
    return k;
}

// Independent natural-spline oracle: second derivatives M from the textbook
// tridiagonal system solved by dense Gaussian elimination, evaluated with the
// global-coordinate formula.
struct OracleSpline {
    std::vector<double> x, y, m;

    explicit OracleSpline(const std::vector<Knot>& knots) {
        for (const auto& k : knots) {
            x.push_back(k.step);
            y.push_back(k.perplexity);
        }
        const std::size_t n = x.size();
        std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
        a[0][0] = 1.0;
        a[n - 1][n - 1] = 1.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x[i] - x[i - 1];
            const double h1 = x[i + 1] - x[i];
            a[i][i - 1] = h0 / 6.0;
            a[i][i] = (h0 + h1) / 3.0;
            a[i][i + 1] = h1 / 6.0;
            a[i][n] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < n; ++r) {
                if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
            }
            std::swap(a[c], a[piv]);
            for (std::size_t r = 0; r < n; ++r) {
                if (r == c) continue;
                const double f = a[r][c] / a[c][c];
                for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
            }
        }
        m.resize(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = a[i][n] / a[i][i];
    }

    double operator()(double s) const {
        std::size_t i = 0;
        while (i + 2 < x.size() && s > x[i + 1]) ++i;
        const double h = x[i + 1] - x[i];
        const double A = (x[i + 1] - s) / h;
        const double B = (s - x[i]) / h;
        return A * y[i] + B * y[i + 1] + ((A * A * A - A) * m[i] + (B * B * B - B) * m[i + 1]) * h * h / 6.0;
    }
};

}  // namespace

TEST_CASE("spline preconditions") {
    CHECK(error_code([] { CubicSpline::fit(knots_of({0, 1, 2}, {1, 2, 3})); }) == "insufficient_observations");
    CHECK(error_code([] { CubicSpline::fit(knots_of({0, 2, 1, 3}, {1, 2, 3, 4})); }) == "unsorted_steps");
    CHECK(error_code([] { CubicSpline::fit(knots_of({0, 1, 1, 3}, {1, 2, 3, 4})); }) == "unsorted_steps");
    CHECK(error_code([] { CubicSpline::fit(knots_of({0, 1, 2, 3}, {1, -2, 3, 4})); }) == "bad_perplexity");
}

TEST_CASE("spline reproduces affine data") {
    const auto s = CubicSpline::fit(knots_of({0, 1000, 2500, 4000, 7000}, {10, 9, 7.5, 6, 3}));
    for (double x = 0; x <= 7000; x += 37.5) CHECK(s.evaluate(x) == doctest::Approx(10 - x / 1000).epsilon(1e-12));
}

TEST_CASE("spline interpolates knots, natural ends, C2 interior") {
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(1.0, 50.0);
    std::vector<double> xs;
    std::vector<double> ys;
    double x = 0;
    for (int i = 0; i < 12; ++i) {
        xs.push_back(x);
        ys.push_back(u(g));
        x += 500 + 1000 * u(g) / 50;
    }
    const auto s = CubicSpline::fit(knots_of(xs, ys));
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(s.evaluate(xs[i]) - ys[i]) <= 1e-9 * ys[i]);
    CHECK(std::abs(s.second_derivative(xs.front())) <= 1e-9);
    CHECK(std::abs(s.second_derivative(xs.back())) <= 1e-9);
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
        CHECK(s.second_derivative_left(k) == doctest::Approx(s.second_derivative_right(k)).epsilon(1e-9));
    }
    const OracleSpline oracle(knots_of(xs, ys));
    for (double t = xs.front(); t <= xs.back(); t += 13.7) {
        CHECK(s.evaluate(t) == doctest::Approx(oracle(t)).epsilon(1e-9));
    }
}

TEST_CASE("curve minimum examples") {
    SUBCASE("parabola sampled at five points") {
        const auto s = CubicSpline::fit(knots_of({0, 1, 2, 3, 4}, {5, 2, 1, 2, 5}));
        const auto m = s.minimum();
        // Dense-grid oracle over the fitted spline.
        double best_x = 0;
        double best_y = INFINITY;
        for (int i = 0; i <= 100000; ++i) {
            const double x = 4.0 * i / 100000;
            if (s.evaluate(x) < best_y) {
                best_y = s.evaluate(x);
                best_x = x;
            }
        }
        CHECK(std::abs(m.step - 2.0) <= 1e-3);
        CHECK(std::abs(m.step - best_x) <= 1e-3 * 4);
        CHECK(m.perplexity == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m.perplexity <= best_y + 1e-12);
    }
    SUBCASE("strictly decreasing knots bottom out at the last step") {
        const auto m = CubicSpline::fit(knots_of({0, 10, 20, 30, 40}, {9, 7, 6, 5.5, 5})).minimum();
        CHECK(m.step == 40);
        CHECK(m.perplexity == 5);
    }
    SUBCASE("constant knots tie-break to the first step") {
        const auto m = CubicSpline::fit(knots_of({100, 200, 300, 400}, {3, 3, 3, 3})).minimum();
        CHECK(m.step == 100);
        CHECK(m.perplexity == 3);
    }
}

TEST_CASE("curve minimum never exceeds the smallest knot") {
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> u(1.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (int i = 0; i < 8; ++i) {
            xs.push_back(1000.0 * i);
            ys.push_back(u(g));
        }
        const auto m = CubicSpline::fit(knots_of(xs, ys)).minimum();
        CHECK(m.perplexity <= *std::min_element(ys.begin(), ys.end()) + 1e-9);
    }
}

namespace {

std::vector<PerplexityObservation> logs_for(const std::string& id, std::uint64_t tokens,
                                            const std::vector<std::pair<std::uint64_t, double>>& points) {
    std::vector<PerplexityObservation> out;
    for (auto [s, p] : points) out.push_back({id, s, p, tokens});
    return out;
}

MixState state_with(std::map<std::string, double> r, std::map<std::string, double> s_i, double s_bar) {
    MixState st;
    st.proportions = std::move(r);
    for (auto [id, s] : s_i) st.minima[id] = {s, 1.0};
    st.average_minimum = CurveMinimum{s_bar, 1.0};
    return st;
}

}  // namespace

TEST_CASE("weighted average curve") {
    GroupedLogs g;
    g["a"] = logs_for("a", 3, {{0, 2}, {1, 2}, {2, 2}, {3, 2}});
    g["b"] = logs_for("b", 1, {{0, 6}, {1, 6}, {2, 6}, {3, 6}});
    CHECK(weighted_average_curve(g).spline.evaluate(1) == doctest::Approx(3.0));
    g["a"] = logs_for("a", 1, {{0, 2}, {1, 2}, {2, 2}, {3, 2}});
    CHECK(weighted_average_curve(g).spline.evaluate(2) == doctest::Approx(4.0));
    g["b"].pop_back();
    try {
        weighted_average_curve(g);
        FAIL("expected misaligned_steps");
    } catch (const Error& e) {
        CHECK(e.code() == "misaligned_steps");
        CHECK(std::string(e.what()).find("(b, 3)") != std::string::npos);
    }
}

TEST_CASE("update_proportions examples") {
    SUBCASE("fixed point") {
        const auto u = update_proportions(state_with({{"a", 0.3}, {"b", 0.7}}, {{"a", 5000}, {"b", 5000}}, 5000));
        CHECK(u.normalized.at("a") == 0.3);
        CHECK(u.normalized.at("b") == 0.7);
    }
    SUBCASE("offset of one mu") {
        const auto u = update_proportions(state_with({{"a", 0.2}, {"b", 0.8}}, {{"a", 25000}, {"b", 10000}}, 10000));
        CHECK(u.unnormalized.at("a") == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("symmetric offsets") {
        const auto u = update_proportions(state_with({{"a", 0.5}, {"b", 0.5}}, {{"a", 30000}, {"b", 0}}, 15000));
        CHECK(u.unnormalized.at("a") == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(u.unnormalized.at("b") == doctest::Approx(0.05).epsilon(1e-12));
        CHECK(u.normalized.at("a") == doctest::Approx(100.0 / 101.0).epsilon(1e-12));
        CHECK(u.normalized.at("b") == doctest::Approx(1.0 / 101.0).epsilon(1e-12));
    }
    SUBCASE("kappa and mu must be positive") {
        auto st = state_with({{"a", 1.0}}, {{"a", 0}}, 0);
        st.kappa = 0;
        CHECK_THROWS_AS(update_proportions(st), ValidationError);
        st.kappa = 10;
        st.mu = -1;
        CHECK_THROWS_AS(update_proportions(st), ValidationError);
    }
}

TEST_CASE("update_proportions properties") {
    std::mt19937_64 g(12);
    std::uniform_real_distribution<double> ur(0.01, 1.0);
    std::uniform_real_distribution<double> us(0.0, 60000.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::map<std::string, double> r;
        std::map<std::string, double> s;
        double total = 0;
        const int n = 2 + trial % 6;
        for (int i = 0; i < n; ++i) {
            const std::string id = "s" + std::to_string(i);
            r[id] = ur(g);
            total += r[id];
            s[id] = us(g);
        }
        for (auto& [k, v] : r) v /= total;
        const double sbar = us(g);
        const auto u = update_proportions(state_with(r, s, sbar));
        double sum = 0;
        for (const auto& [k, v] : u.normalized) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);

        // Scale invariance after normalization.
        auto scaled = r;
        for (auto& [k, v] : scaled) v *= 3.0;
        auto st = state_with(scaled, s, sbar);
        const auto u2 = update_proportions(st);
        for (const auto& [k, v] : u.normalized) CHECK(u2.normalized.at(k) == doctest::Approx(v).epsilon(1e-12));

        // Later minima grow strictly more.
        for (const auto& [a, sa] : s) {
            for (const auto& [b, sb] : s) {
                if (sa > sb) CHECK(u.unnormalized.at(a) / r.at(a) > u.unnormalized.at(b) / r.at(b));
            }
        }
    }
}

TEST_CASE("mix_iterate advances the round and enforces the cap") {
    std::vector<PerplexityObservation> logs;
    for (std::uint64_t s = 0; s <= 10000; s += 1000) {
        const double x = (static_cast<double>(s) - 5000.0) / 1000.0;
        logs.push_back({"only", s, x * x + 3.0, 100});
    }
    MixState st;
    st.max_rounds = 2;
    auto r1 = mix_iterate(logs, st);
    CHECK(r1.state.round == 1);
    CHECK(r1.state.proportions.at("only") == 1.0);
    CHECK(r1.report.round == 0);
    auto r2 = mix_iterate(logs, r1.state);
    CHECK(r2.state.round == 2);
    CHECK(error_code([&] { mix_iterate(logs, r2.state); }) == "max_rounds_reached");
}

TEST_CASE("mix_iterate names the subset that cannot be fitted") {
    std::vector<PerplexityObservation> logs;
    for (std::uint64_t s = 0; s < 5; ++s) logs.push_back({"good", s * 10, 3.0, 1});
    for (std::uint64_t s = 0; s < 3; ++s) logs.push_back({"thin", s * 10, 3.0, 1});
    try {
        mix_iterate(logs, MixState{});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("thin") != std::string::npos);
    }
}

TEST_CASE("state json round trip and csv logs") {
    MixState st = state_with({{"a", 0.25}, {"b", 0.75}}, {{"a", 100}, {"b", 200}}, 150);
    st.round = 3;
    const MixState back = state_from_json(state_to_json(st));
    CHECK(back.round == 3);
    CHECK(back.proportions == st.proportions);
    CHECK(back.average_minimum->step == 150);
    json bad = state_to_json(st);
    bad["kappa"] = -1;
    try {
        state_from_json(bad);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "kappa");
    }

    const auto path = std::filesystem::temp_directory_path() / "datamix_test_logs.csv";
    {
        std::ofstream out(path);
        out << "subset_id,step,perplexity,token_count\n";
        out << "a,0,3.5,10\n"
               "a,100,3.25,10\n";
    }
    const auto obs = read_observations(path);
    REQUIRE(obs.size() == 2);
    CHECK(obs[1].subset_id == "a");
    CHECK(obs[1].step == 100);
    CHECK(obs[1].perplexity == 3.25);
    CHECK(obs[1].token_count == 10);
    std::filesystem::remove(path);
}
