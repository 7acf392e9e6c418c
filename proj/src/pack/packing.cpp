#include "datamix/pack/packing.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "datamix/common/error.hpp"
#include "datamix/common/parallel.hpp"

namespace datamix::pack {

std::string mode_name(PackMode mode) {
    return mode == PackMode::sft_pack ? "sft_pack" : "pretrain_concat";
}

PackMode parse_mode(const std::string& name) {
    if (name == "pretrain" || name == "pretrain_concat") return PackMode::pretrain_concat;
    if (name == "sft" || name == "sft_pack") return PackMode::sft_pack;
    throw ValidationError("mode", "unknown packing mode '" + name + "'");
}

PackSample sample_from_json(const json& row) {
    PackSample s;
    try {
        const json& id = row.at("id");
        s.id = id.is_string() ? id.get<std::string>() : id.dump();
        const auto len = row.at("token_length").get<std::int64_t>();
        if (len < 0) throw ValidationError("token_length", "sample " + s.id + " has a negative length");
        s.token_length = static_cast<std::uint64_t>(len);
        s.source = row.value("source", std::string{});
        if (auto it = row.find("turns"); it != row.end() && it->is_array()) {
            for (const auto& t : *it) s.turns.push_back({t.at("role").get<std::string>(), t.at("tokens").get<std::uint64_t>()});
        }
    } catch (const json::exception& e) {
        throw Error("bad_sample", std::string("packing sample: ") + e.what());
    }
    return s;
}

json sample_to_json(const PackSample& s) {
    json row = {{"id", s.id}, {"token_length", s.token_length}, {"source", s.source}};
    if (!s.turns.empty()) {
        json turns = json::array();
        for (const auto& t : s.turns) turns.push_back({{"role", t.role}, {"tokens", t.tokens}});
        row["turns"] = std::move(turns);
    }
    return row;
}

bool is_single_turn(const PackSample& s) {
    return s.turns.empty() || (s.turns.size() == 2 && s.turns[0].role == "user" && s.turns[1].role == "assistant");
}

namespace {

json turns_to_json(const std::vector<Turn>& turns) {
    json out = json::array();
    for (const auto& t : turns) out.push_back({{"role", t.role}, {"tokens", t.tokens}});
    return out;
}

std::vector<Turn> turns_from_json(const json& j) {
    std::vector<Turn> out;
    for (const auto& t : j) out.push_back({t.at("role").get<std::string>(), t.at("tokens").get<std::uint64_t>()});
    return out;
}

std::vector<Turn> truncate_turns(const std::vector<Turn>& turns, std::uint64_t limit) {
    std::vector<Turn> out;
    for (const auto& t : turns) {
        if (limit == 0) break;
        out.push_back({t.role, std::min(t.tokens, limit)});
        limit -= out.back().tokens;
    }
    return out;
}

void check_sample(const PackSample& s, const PackOptions& opt) {
    if (s.token_length == 0) throw ValidationError("token_length", "sample " + s.id + " is empty");
    if (!s.turns.empty()) {
        const std::uint64_t sum = std::accumulate(s.turns.begin(), s.turns.end(), std::uint64_t{0},
                                                  [](std::uint64_t a, const Turn& t) { return a + t.tokens; });
        if (sum != s.token_length) {
            throw ValidationError("turns", "sample " + s.id + ": turn tokens sum to " + std::to_string(sum) +
                                               ", expected " + std::to_string(s.token_length));
        }
    }
    if (opt.strict && s.token_length > opt.max_len) {
        throw Error("sample_too_long", "sample " + s.id + " has " + std::to_string(s.token_length) +
                                           " tokens, above max_len " + std::to_string(opt.max_len));
    }
}

void place(PackedSequence& seq, const PackSample& s, std::size_t index, std::uint64_t length) {
    Segment seg;
    seg.sample_id = s.id;
    seg.start_offset = seq.used();
    seg.token_length = length;
    seg.input_index = index;
    seg.truncated = length < s.token_length;
    seg.original_length = s.token_length;
    seg.turns = seg.truncated ? truncate_turns(s.turns, length) : s.turns;

    if (seq.mode == PackMode::sft_pack) {
        std::vector<std::string> roles;
        if (s.turns.empty()) {
            roles = {"user", "assistant"};
        } else {
            for (const auto& t : seg.turns) roles.push_back(t.role);
        }
        // Single-turn samples in one sequence share a single dialogue.
        const bool single = is_single_turn(s) && !seg.truncated;
        auto open = seq.dialogues.end();
        if (single) {
            open = std::find_if(seq.dialogues.begin(), seq.dialogues.end(), [](const Dialogue& d) {
                return d.merged || (d.roles.size() == 2 && d.roles[0] == "user" && d.roles[1] == "assistant");
            });
        }
        if (single && open != seq.dialogues.end()) {
            open->sample_ids.push_back(s.id);
            open->merged = true;
            open->roles.insert(open->roles.end(), roles.begin(), roles.end());
            seg.dialogue = static_cast<std::size_t>(open - seq.dialogues.begin());
        } else {
            seg.dialogue = seq.dialogues.size();
            seq.dialogues.push_back({{s.id}, false, std::move(roles)});
        }
    }
    seq.pad_length -= length;
    seq.segments.push_back(std::move(seg));
}

std::vector<PackedSequence> pack_group(const std::vector<PackSample>& samples, const std::vector<std::size_t>& group,
                                       const PackOptions& opt) {
    std::vector<PackedSequence> bins;
    for (const std::size_t i : group) {
        const PackSample& s = samples[i];
        const std::uint64_t length = std::min(s.token_length, opt.max_len);
        auto bin = std::find_if(bins.begin(), bins.end(), [&](const PackedSequence& b) { return b.pad_length >= length; });
        if (bin == bins.end()) {
            bins.push_back({opt.max_len, s.source, opt.mode, {}, opt.max_len, {}});
            bin = std::prev(bins.end());
        }
        place(*bin, s, i, length);
    }
    return bins;
}

}  // namespace

std::vector<PackedSequence> pack_sequences(const std::vector<PackSample>& samples, const PackOptions& options) {
    if (options.max_len == 0) throw ValidationError("max_len", "must be positive");
    for (const auto& s : samples) check_sample(s, options);

    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto [it, inserted] = group_of.try_emplace(samples[i].source, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    std::vector<std::vector<PackedSequence>> packed(groups.size());
    parallel_for(groups.size(), options.threads, [&](std::size_t g) { packed[g] = pack_group(samples, groups[g], options); });

    std::vector<PackedSequence> out;
    for (auto& g : packed) std::move(g.begin(), g.end(), std::back_inserter(out));
    return out;
}

std::vector<UnpackedSample> unpack_sequences(const std::vector<PackedSequence>& sequences) {
    std::vector<std::pair<std::size_t, UnpackedSample>> rows;
    for (std::size_t q = 0; q < sequences.size(); ++q) {
        const auto& seq = sequences[q];
        std::uint64_t offset = 0;
        for (const auto& seg : seq.segments) {
            if (seg.start_offset != offset || seg.token_length == 0) {
                throw Error("bad_packing", "sequence " + std::to_string(q) + ": segment " + seg.sample_id +
                                               " is not contiguous");
            }
            offset += seg.token_length;
            rows.push_back({seg.input_index, {seg.sample_id, seq.source, seg.token_length, seg.truncated}});
        }
        if (offset > seq.max_len || offset + seq.pad_length != seq.max_len) {
            throw Error("bad_packing", "sequence " + std::to_string(q) + ": segments and padding do not fill max_len");
        }
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<UnpackedSample> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].first == rows[i - 1].first) {
            throw Error("bad_packing", "input index " + std::to_string(rows[i].first) + " appears twice");
        }
        out.push_back(std::move(rows[i].second));
    }
    return out;
}

json sequence_to_json(const PackedSequence& seq) {
    json segs = json::array();
    for (const auto& s : seq.segments) {
        json row = {{"sample_id", s.sample_id},     {"start_offset", s.start_offset}, {"token_length", s.token_length},
                    {"input_index", s.input_index}, {"truncated", s.truncated}};
        if (s.truncated) row["original_length"] = s.original_length;
        if (seq.mode == PackMode::sft_pack) row["dialogue"] = s.dialogue;
        if (!s.turns.empty()) row["turns"] = turns_to_json(s.turns);
        segs.push_back(std::move(row));
    }
    json out = {{"max_len", seq.max_len},
                {"source", seq.source},
                {"mode", mode_name(seq.mode)},
                {"segments", std::move(segs)},
                {"pad_length", seq.pad_length}};
    if (seq.mode == PackMode::sft_pack) {
        json dialogues = json::array();
        for (const auto& d : seq.dialogues) {
            dialogues.push_back({{"sample_ids", d.sample_ids}, {"merged", d.merged}, {"roles", d.roles}});
        }
        out["dialogues"] = std::move(dialogues);
    }
    return out;
}

PackedSequence sequence_from_json(const json& j) {
    PackedSequence seq;
    try {
        seq.max_len = j.at("max_len").get<std::uint64_t>();
        seq.source = j.value("source", std::string{});
        seq.mode = parse_mode(j.at("mode").get<std::string>());
        seq.pad_length = j.at("pad_length").get<std::uint64_t>();
        for (const auto& r : j.at("segments")) {
            Segment s;
            s.sample_id = r.at("sample_id").get<std::string>();
            s.start_offset = r.at("start_offset").get<std::uint64_t>();
            s.token_length = r.at("token_length").get<std::uint64_t>();
            s.input_index = r.value("input_index", std::size_t{0});
            s.truncated = r.value("truncated", false);
            s.original_length = r.value("original_length", s.token_length);
            s.dialogue = r.value("dialogue", std::size_t{0});
            if (auto it = r.find("turns"); it != r.end()) s.turns = turns_from_json(*it);
            seq.segments.push_back(std::move(s));
        }
        if (auto it = j.find("dialogues"); it != j.end()) {
            for (const auto& d : *it) {
                seq.dialogues.push_back({d.at("sample_ids").get<std::vector<std::string>>(), d.value("merged", false),
                                         d.value("roles", std::vector<std::string>{})});
            }
        }
    } catch (const json::exception& e) {
        throw Error("bad_packing", std::string("packed sequence: ") + e.what());
    }
    return seq;
}

json PackReport::to_json() const {
    return {{"samples", samples},
            {"sequences", sequences},
            {"input_tokens", input_tokens},
            {"packed_tokens", packed_tokens},
            {"pad_tokens", pad_tokens},
            {"truncated", truncated},
            {"merged_dialogues", merged_dialogues}};
}

PackReport pack_report(const std::vector<PackSample>& samples, const std::vector<PackedSequence>& sequences) {
    PackReport r;
    r.samples = samples.size();
    r.sequences = sequences.size();
    for (const auto& s : samples) r.input_tokens += s.token_length;
    for (const auto& seq : sequences) {
        r.pad_tokens += seq.pad_length;
        for (const auto& seg : seq.segments) {
            r.packed_tokens += seg.token_length;
            r.truncated += seg.truncated ? 1 : 0;
        }
        for (const auto& d : seq.dialogues) r.merged_dialogues += d.merged ? 1 : 0;
    }
    return r;
}

}  // namespace datamix::pack
