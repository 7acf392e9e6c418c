#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datamix/common/jsonl.hpp"
#include "datamix/mix/spline.hpp"

namespace datamix::mix {

struct PerplexityObservation {
    std::string subset_id;
    std::uint64_t step = 0;
    double perplexity = 0.0;
    std::uint64_t token_count = 0;
};

// One subset's fitted curve and its lowest point.
struct SubsetCurve {
    std::string subset_id;
    CubicSpline spline;
    CurveMinimum minimum;
};

// Observations grouped by subset, each sorted by step.
using GroupedLogs = std::map<std::string, std::vector<PerplexityObservation>>;

// Groups and sorts by step. Raises "unsorted_steps" on a repeated step
// within a subset and "inconsistent_token_count" when a subset reports more
// than one token_count (weights are fixed per subset).
GroupedLogs group_observations(const std::vector<PerplexityObservation>& logs);

SubsetCurve fit_subset(const std::string& subset_id, const std::vector<PerplexityObservation>& obs);

// p_bar(s) = sum_i w_i p_i(s) / sum_i w_i with w_i the subset token count,
// evaluated on the shared step grid and then fitted. Raises "misaligned_steps"
// listing every missing (subset, step) pair.
SubsetCurve weighted_average_curve(const GroupedLogs& grouped);

struct MixState {
    std::uint64_t round = 0;
    std::uint64_t max_rounds = 10;
    double kappa = 10.0;
    double mu = 15000.0;
    std::map<std::string, double> proportions;
    std::map<std::string, CurveMinimum> minima;
    std::optional<CurveMinimum> average_minimum;

    // Raises ValidationError on kappa/mu <= 0, round > max_rounds, negative
    // or non-normalized proportions.
    void validate() const;
};

struct ProportionUpdate {
    std::map<std::string, double> unnormalized;
    std::map<std::string, double> normalized;
};

// r_i <- r_i * kappa^((s_i - s_bar) / mu), then normalized to sum to one.
ProportionUpdate update_proportions(const MixState& state);

struct SubsetRoundReport {
    std::string subset_id;
    CurveMinimum minimum;
    double old_proportion;
    double unnormalized;
    double new_proportion;
};

struct RoundReport {
    std::uint64_t round;  // round that was evaluated
    CurveMinimum average_minimum;
    std::vector<SubsetRoundReport> subsets;

    json to_json() const;
};

struct IterationResult {
    MixState state;  // advanced to round + 1
    RoundReport report;
};

// One round: fit every subset, locate minima and the weighted-average
// minimum, update proportions, advance the round counter.
// Raises "max_rounds_reached" when state.round >= state.max_rounds and
// "subset_fit_failed" naming the subset whose curve could not be fitted.
// An empty proportion map starts from the uniform mix over logged subsets.
IterationResult mix_iterate(const std::vector<PerplexityObservation>& logs, const MixState& state);

// JSONL or CSV (header: subset_id,step,perplexity,token_count); CSV is
// detected by the first non-blank character not being '{'.
std::vector<PerplexityObservation> read_observations(const std::filesystem::path& path);

json state_to_json(const MixState& state);
MixState state_from_json(const json& j);

}  // namespace datamix::mix
