#include "datamix/mix/mixer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "datamix/common/error.hpp"
#include "datamix/common/text.hpp"

namespace datamix::mix {

GroupedLogs group_observations(const std::vector<PerplexityObservation>& logs) {
    GroupedLogs grouped;
    for (const auto& o : logs) grouped[o.subset_id].push_back(o);
    for (auto& [id, obs] : grouped) {
        std::stable_sort(obs.begin(), obs.end(),
                         [](const PerplexityObservation& a, const PerplexityObservation& b) { return a.step < b.step; });
        for (std::size_t i = 1; i < obs.size(); ++i) {
            if (obs[i].step == obs[i - 1].step) {
                throw Error("unsorted_steps",
                            "subset " + id + " reports step " + std::to_string(obs[i].step) + " twice");
            }
        }
        for (const auto& o : obs) {
            if (o.token_count != obs.front().token_count) {
                throw Error("inconsistent_token_count", "subset " + id + " reports more than one token_count");
            }
        }
    }
    return grouped;
}

SubsetCurve fit_subset(const std::string& subset_id, const std::vector<PerplexityObservation>& obs) {
    std::vector<Knot> knots;
    knots.reserve(obs.size());
    for (const auto& o : obs) knots.push_back({static_cast<double>(o.step), o.perplexity});
    SubsetCurve curve{subset_id, CubicSpline::fit(knots), {}};
    curve.minimum = curve.spline.minimum();
    return curve;
}

SubsetCurve weighted_average_curve(const GroupedLogs& grouped) {
    if (grouped.empty()) throw Error("insufficient_observations", "no subsets to average");
    std::set<std::uint64_t> all_steps;
    for (const auto& [id, obs] : grouped) {
        for (const auto& o : obs) all_steps.insert(o.step);
    }
    std::vector<std::string> missing;
    for (const auto& [id, obs] : grouped) {
        std::set<std::uint64_t> have;
        for (const auto& o : obs) have.insert(o.step);
        for (auto s : all_steps) {
            if (!have.contains(s)) missing.push_back("(" + id + ", " + std::to_string(s) + ")");
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
        throw Error("misaligned_steps", "step grids differ across subsets; missing " + list);
    }

    double total_weight = 0.0;
    for (const auto& [id, obs] : grouped) {
        if (obs.front().token_count == 0) throw Error("bad_token_count", "subset " + id + " has zero tokens");
        total_weight += static_cast<double>(obs.front().token_count);
    }
    std::vector<PerplexityObservation> avg;
    std::size_t idx = 0;
    for (auto s : all_steps) {
        double acc = 0.0;
        for (const auto& [id, obs] : grouped) acc += static_cast<double>(obs.front().token_count) * obs[idx].perplexity;
        avg.push_back({"__weighted_average__", s, acc / total_weight, 1});
        ++idx;
    }
    return fit_subset("__weighted_average__", avg);
}

void MixState::validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("kappa", "must be positive");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("mu", "must be positive");
    if (max_rounds == 0) throw ValidationError("max_rounds", "must be positive");
    if (round > max_rounds) throw ValidationError("round", "exceeds max_rounds");
    if (proportions.empty()) return;
    double sum = 0.0;
    for (const auto& [id, r] : proportions) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("proportions." + id, "must be non-negative");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("proportions", "must sum to 1");
}

ProportionUpdate update_proportions(const MixState& state) {
    if (!(state.kappa > 0.0)) throw ValidationError("kappa", "must be positive");
    if (!(state.mu > 0.0)) throw ValidationError("mu", "must be positive");
    if (!state.average_minimum) throw Error("missing_minimum", "average-curve minimum not populated");

    ProportionUpdate out;
    double sum = 0.0;
    for (const auto& [id, r] : state.proportions) {
        auto it = state.minima.find(id);
        if (it == state.minima.end()) throw Error("missing_minimum", "no curve minimum for subset " + id);
        const double exponent = (it->second.step - state.average_minimum->step) / state.mu;
        const double v = r * std::pow(state.kappa, exponent);
        out.unnormalized[id] = v;
        sum += v;
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        throw Error("degenerate_proportions", "updated proportions do not have a positive finite sum");
    }
    for (const auto& [id, v] : out.unnormalized) out.normalized[id] = v / sum;
    return out;
}

json RoundReport::to_json() const {
    json subs = json::array();
    for (const auto& s : subsets) {
        subs.push_back({{"subset_id", s.subset_id},
                        {"min_step", s.minimum.step},
                        {"min_perplexity", s.minimum.perplexity},
                        {"old_proportion", s.old_proportion},
                        {"unnormalized", s.unnormalized},
                        {"new_proportion", s.new_proportion}});
    }
    return {{"round", round},
            {"average_min_step", average_minimum.step},
            {"average_min_perplexity", average_minimum.perplexity},
            {"subsets", std::move(subs)}};
}

IterationResult mix_iterate(const std::vector<PerplexityObservation>& logs, const MixState& state) {
    if (state.round >= state.max_rounds) {
        throw Error("max_rounds_reached", "round " + std::to_string(state.round) + " reached the cap of " +
                                              std::to_string(state.max_rounds));
    }
    state.validate();
    const GroupedLogs grouped = group_observations(logs);
    if (grouped.empty()) throw Error("insufficient_observations", "no perplexity observations");

    MixState next = state;
    if (next.proportions.empty()) {
        for (const auto& [id, obs] : grouped) next.proportions[id] = 1.0 / static_cast<double>(grouped.size());
    }
    for (const auto& [id, r] : next.proportions) {
        if (!grouped.contains(id)) throw Error("missing_subset", "no observations for subset " + id);
    }
    for (const auto& [id, obs] : grouped) {
        if (!next.proportions.contains(id)) throw Error("unknown_subset", "subset " + id + " is not in the mix state");
    }

    next.minima.clear();
    for (const auto& [id, obs] : grouped) {
        try {
            next.minima[id] = fit_subset(id, obs).minimum;
        } catch (const Error& e) {
            throw Error("subset_fit_failed", "subset " + id + ": " + e.what());
        }
    }
    next.average_minimum = weighted_average_curve(grouped).minimum;

    const ProportionUpdate upd = update_proportions(next);
    RoundReport report{state.round, *next.average_minimum, {}};
    for (const auto& [id, r] : next.proportions) {
        report.subsets.push_back({id, next.minima.at(id), r, upd.unnormalized.at(id), upd.normalized.at(id)});
    }
    next.proportions = upd.normalized;
    next.round = state.round + 1;
    return {std::move(next), std::move(report)};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::uint64_t parse_u64(std::string_view s, const std::string& where) {
    s = text::trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("bad_logs", where + ": expected an integer");
    return v;
}

double parse_double(std::string_view s, const std::string& where) {
    const std::string str(text::trim(s));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(str, &used);
    } catch (const std::exception&) {
        throw Error("bad_logs", where + ": expected a number");
    }
    if (used != str.size()) throw Error("bad_logs", where + ": expected a number");
    return v;
}

PerplexityObservation observation_from_json(const json& row, const std::string& where) {
    try {
        PerplexityObservation o;
        const json& id = row.at("subset_id");
        o.subset_id = id.is_string() ? id.get<std::string>() : id.dump();
        o.step = row.at("step").get<std::uint64_t>();
        o.perplexity = row.at("perplexity").get<double>();
        o.token_count = row.at("token_count").get<std::uint64_t>();
        return o;
    } catch (const json::exception& e) {
        throw Error("bad_logs", where + ": " + e.what());
    }
}

}  // namespace

std::vector<PerplexityObservation> read_observations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    const std::size_t first = content.find_first_not_of(" \t\r\n");
    std::vector<PerplexityObservation> out;
    if (first == std::string::npos) return out;

    if (content[first] == '{') {
        std::istringstream lines(content);
        std::size_t lineno = 0;
        for (const auto& row : read_jsonl(lines, path.string())) {
            out.push_back(observation_from_json(row, path.string() + " row " + std::to_string(++lineno)));
        }
        return out;
    }

    std::istringstream lines(content);
    std::string line;
    std::vector<std::string> header;
    std::size_t lineno = 0;
    std::size_t col_id = 0, col_step = 0, col_ppl = 0, col_tok = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (header.empty()) {
            header = fields;
            auto col = [&](const char* name) {
                for (std::size_t i = 0; i < header.size(); ++i) {
                    if (text::trim(header[i]) == name) return i;
                }
                throw Error("bad_logs", where + ": CSV header lacks column " + name);
            };
            col_id = col("subset_id");
            col_step = col("step");
            col_ppl = col("perplexity");
            col_tok = col("token_count");
            continue;
        }
        if (fields.size() != header.size()) throw Error("bad_logs", where + ": wrong field count");
        out.push_back({std::string(text::trim(fields[col_id])), parse_u64(fields[col_step], where),
                       parse_double(fields[col_ppl], where), parse_u64(fields[col_tok], where)});
    }
    return out;
}

json state_to_json(const MixState& state) {
    json j = {{"round", state.round},
              {"max_rounds", state.max_rounds},
              {"kappa", state.kappa},
              {"mu", state.mu},
              {"proportions", state.proportions}};
    json minima = json::object();
    for (const auto& [id, m] : state.minima) minima[id] = {{"step", m.step}, {"perplexity", m.perplexity}};
    j["minima"] = std::move(minima);
    if (state.average_minimum) {
        j["average_minimum"] = {{"step", state.average_minimum->step},
                                {"perplexity", state.average_minimum->perplexity}};
    } else {
        j["average_minimum"] = nullptr;
    }
    return j;
}

MixState state_from_json(const json& j) {
    MixState s;
    try {
        s.round = j.value("round", std::uint64_t{0});
        s.max_rounds = j.value("max_rounds", s.max_rounds);
        s.kappa = j.value("kappa", s.kappa);
        s.mu = j.value("mu", s.mu);
        if (auto it = j.find("proportions"); it != j.end() && !it->is_null()) {
            s.proportions = it->get<std::map<std::string, double>>();
        }
        if (auto it = j.find("minima"); it != j.end() && it->is_object()) {
            for (const auto& [id, m] : it->items()) {
                s.minima[id] = {m.at("step").get<double>(), m.at("perplexity").get<double>()};
            }
        }
        if (auto it = j.find("average_minimum"); it != j.end() && it->is_object()) {
            s.average_minimum = CurveMinimum{it->at("step").get<double>(), it->at("perplexity").get<double>()};
        }
    } catch (const json::exception& e) {
        throw Error("bad_state", std::string("mix state: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace datamix::mix
