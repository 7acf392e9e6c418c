#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "datamix/common/jsonl.hpp"

namespace datamix::corpus {

// An item handed to an external quality scorer.
struct ScoreItem {
    std::string id;
    std::string text;
};

struct ScoreRecord {
    std::string id;
    std::optional<double> score;  // empty => unscored
    std::vector<std::string> flags;
    std::string error;            // last failure for unscored items
};

// HTTP endpoint: POST {"items":[{"id","text"}...]} and expect
// {"scores":[{"id","score","flags"?}...]}.
struct HttpScorer {
    std::string url;  // http://host[:port]/path
    std::chrono::milliseconds timeout{30000};
};

// Subprocess: `/bin/sh -c command` reads JSONL {"id","text"} on stdin and
// writes JSONL {"id","score","flags"?} on stdout.
struct CommandScorer {
    std::string command;
};

struct ScorerEndpoint {
    std::variant<HttpScorer, CommandScorer> target;
    // Additional attempts after the first, applied to items still unscored.
    std::size_t retries = 2;
    std::chrono::milliseconds backoff{0};
};

struct ScoreBatchResult {
    std::vector<ScoreRecord> records;  // input order, one per item
    std::size_t scored = 0;
    std::size_t unscored = 0;
    // Failed endpoint calls (transport errors, bad responses) across attempts.
    std::size_t transport_errors = 0;

    std::size_t error_count() const { return unscored + transport_errors; }
    json to_json() const;
};

// Scores every item through the endpoint. Items the scorer omits, rejects
// (an "error" field or non-numeric score) or that fail in transport are
// retried; after the last attempt they are reported unscored, never dropped.
ScoreBatchResult score_gateway(const std::vector<ScoreItem>& items, const ScorerEndpoint& endpoint);

// Parses one scorer reply line/entry. Exposed for tests.
std::optional<ScoreRecord> parse_score_entry(const json& entry);

}  // namespace datamix::corpus
