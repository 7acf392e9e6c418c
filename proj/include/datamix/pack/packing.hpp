#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::pack {

enum class PackMode { pretrain_concat, sft_pack };

std::string mode_name(PackMode mode);
// Accepts "pretrain", "pretrain_concat", "sft" and "sft_pack".
PackMode parse_mode(const std::string& name);

struct Turn {
    std::string role;  // "system", "user" or "assistant"
    std::uint64_t tokens = 0;
};

struct PackSample {
    std::string id;
    std::uint64_t token_length = 0;
    std::string source;
    // Optional turn breakdown whose token counts sum to token_length. A
    // sample with no turns, or exactly one user turn followed by one
    // assistant turn, counts as single-turn.
    std::vector<Turn> turns;
};

PackSample sample_from_json(const json& row);
json sample_to_json(const PackSample& s);

bool is_single_turn(const PackSample& s);

struct Segment {
    std::string sample_id;
    std::uint64_t start_offset = 0;
    std::uint64_t token_length = 0;
    std::size_t input_index = 0;  // position in the packing input
    std::size_t dialogue = 0;     // index into PackedSequence::dialogues
    bool truncated = false;
    std::uint64_t original_length = 0;
    std::vector<Turn> turns;  // turn boundaries within the segment
};

// A dialogue inside a packed sequence. Merged dialogues combine several
// single-turn samples into one alternating user/assistant conversation.
struct Dialogue {
    std::vector<std::string> sample_ids;
    bool merged = false;
    std::vector<std::string> roles;  // flattened turn roles in order
};

struct PackedSequence {
    std::uint64_t max_len = 0;
    std::string source;
    PackMode mode = PackMode::pretrain_concat;
    std::vector<Segment> segments;
    std::uint64_t pad_length = 0;
    std::vector<Dialogue> dialogues;  // sft_pack only

    std::uint64_t used() const { return max_len - pad_length; }
};

json sequence_to_json(const PackedSequence& seq);
PackedSequence sequence_from_json(const json& j);

struct PackOptions {
    std::uint64_t max_len = 8192;
    PackMode mode = PackMode::pretrain_concat;
    bool strict = true;  // oversized samples raise instead of truncating
    std::size_t threads = 1;
};

// Greedy first-fit in input order within each source group. Groups are
// emitted in order of first appearance, bins in opening order. Strict mode
// raises "sample_too_long"; lenient mode truncates to max_len and flags the
// segment. Zero-length samples raise ValidationError "token_length".
std::vector<PackedSequence> pack_sequences(const std::vector<PackSample>& samples, const PackOptions& options);

struct UnpackedSample {
    std::string id;
    std::string source;
    std::uint64_t token_length = 0;
    bool truncated = false;
};

// Inverse of pack_sequences: one entry per segment, in original input order.
// Raises "bad_packing" when segments overlap, leave gaps, overflow max_len
// or repeat an input index.
std::vector<UnpackedSample> unpack_sequences(const std::vector<PackedSequence>& sequences);

struct PackReport {
    std::size_t samples = 0;
    std::size_t sequences = 0;
    std::uint64_t input_tokens = 0;
    std::uint64_t packed_tokens = 0;
    std::uint64_t pad_tokens = 0;
    std::size_t truncated = 0;
    std::size_t merged_dialogues = 0;

    json to_json() const;
};

PackReport pack_report(const std::vector<PackSample>& samples, const std::vector<PackedSequence>& sequences);

}  // namespace datamix::pack
