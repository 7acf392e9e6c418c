#include "datamix/corpus/scorer.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "datamix/common/error.hpp"

namespace datamix::corpus {

namespace {

struct AttemptOutcome {
    std::vector<ScoreRecord> replies;
    bool transport_ok = true;
    std::string error;
};

json item_json(const ScoreItem& item) { return {{"id", item.id}, {"text", item.text}}; }

AttemptOutcome call_http(const HttpScorer& target, const std::vector<const ScoreItem*>& batch) {
    AttemptOutcome out;
    // Split "scheme://host[:port]" from the path.
    const std::size_t scheme_end = target.url.find("://");
    const std::size_t path_start =
        scheme_end == std::string::npos ? std::string::npos : target.url.find('/', scheme_end + 3);
    const std::string base = path_start == std::string::npos ? target.url : target.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : target.url.substr(path_start);

    httplib::Client client(base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(target.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(target.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    json body = {{"items", json::array()}};
    for (const ScoreItem* item : batch) body["items"].push_back(item_json(*item));
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        out.transport_ok = false;
        out.error = "http: " + httplib::to_string(res.error());
        return out;
    }
    if (res->status != 200) {
        out.transport_ok = false;
        out.error = "http status " + std::to_string(res->status);
        return out;
    }
    try {
        const json reply = json::parse(res->body);
        const json& scores = reply.is_object() && reply.contains("scores") ? reply.at("scores") : reply;
        if (!scores.is_array()) throw Error("bad_reply", "scores is not an array");
        for (const auto& entry : scores) {
            if (auto rec = parse_score_entry(entry)) out.replies.push_back(std::move(*rec));
        }
    } catch (const std::exception& e) {
        out.transport_ok = false;
        out.error = std::string("bad reply: ") + e.what();
    }
    return out;
}

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            return;  // reader went away; its exit status reports the failure
        }
        off += static_cast<std::size_t>(n);
    }
}

AttemptOutcome call_command(const CommandScorer& target, const std::vector<const ScoreItem*>& batch) {
    AttemptOutcome out;
    static const bool sigpipe_ignored = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)sigpipe_ignored;

    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
        out.transport_ok = false;
        out.error = std::string("pipe: ") + std::strerror(errno);
        return out;
    }
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        out.transport_ok = false;
        out.error = std::string("pipe: ") + std::strerror(errno);
        return out;
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        out.transport_ok = false;
        out.error = std::string("fork: ") + std::strerror(errno);
        return out;
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", target.command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);

    std::string payload;
    for (const ScoreItem* item : batch) {
        payload += item_json(*item).dump();
        payload += '\n';
    }
    std::thread writer([fd = in_pipe[1], &payload] {
        write_all(fd, payload);
        ::close(fd);
    });

    std::string output;
    char buf[65536];
    for (;;) {
        const ssize_t n = ::read(out_pipe[0], buf, sizeof(buf));
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        output.append(buf, static_cast<std::size_t>(n));
    }
    ::close(out_pipe[0]);
    writer.join();

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        out.transport_ok = false;
        out.error = "scorer command exited with status " +
                    std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1);
    }
    std::istringstream lines(output);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            if (auto rec = parse_score_entry(json::parse(line))) out.replies.push_back(std::move(*rec));
        } catch (const json::exception&) {
            out.transport_ok = false;
            out.error = "unparseable scorer output line";
        }
    }
    return out;
}

}  // namespace

std::optional<ScoreRecord> parse_score_entry(const json& entry) {
    if (!entry.is_object() || !entry.contains("id")) return std::nullopt;
    ScoreRecord rec;
    const json& id = entry.at("id");
    rec.id = id.is_string() ? id.get<std::string>() : id.dump();
    if (auto it = entry.find("flags"); it != entry.end() && it->is_array()) {
        for (const auto& f : *it) rec.flags.push_back(f.is_string() ? f.get<std::string>() : f.dump());
    }
    if (auto it = entry.find("error"); it != entry.end() && !it->is_null()) {
        rec.error = it->is_string() ? it->get<std::string>() : it->dump();
        return rec;
    }
    if (auto it = entry.find("score"); it != entry.end() && it->is_number()) {
        const double s = it->get<double>();
        if (std::isfinite(s)) {
            rec.score = s;
        } else {
            rec.error = "non-finite score";
        }
    } else {
        rec.error = "missing numeric score";
    }
    return rec;
}

json ScoreBatchResult::to_json() const {
    json rows = json::array();
    for (const auto& r : records) {
        json row = {{"id", r.id}, {"status", r.score ? "scored" : "unscored"}};
        if (r.score) row["score"] = *r.score;
        if (!r.flags.empty()) row["flags"] = r.flags;
        if (!r.score && !r.error.empty()) row["error"] = r.error;
        rows.push_back(std::move(row));
    }
    return {{"scored", scored},
            {"unscored", unscored},
            {"transport_errors", transport_errors},
            {"error_count", error_count()},
            {"records", std::move(rows)}};
}

ScoreBatchResult score_gateway(const std::vector<ScoreItem>& items, const ScorerEndpoint& endpoint) {
    ScoreBatchResult result;
    result.records.resize(items.size());
    std::map<std::string, std::vector<std::size_t>> index_of;
    for (std::size_t i = 0; i < items.size(); ++i) {
        result.records[i].id = items[i].id;
        index_of[items[i].id].push_back(i);
    }
    std::vector<std::size_t> pending(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) pending[i] = i;

    for (std::size_t attempt = 0; attempt <= endpoint.retries && !pending.empty(); ++attempt) {
        if (attempt > 0 && endpoint.backoff.count() > 0) std::this_thread::sleep_for(endpoint.backoff * attempt);
        std::vector<const ScoreItem*> batch;
        batch.reserve(pending.size());
        for (std::size_t i : pending) batch.push_back(&items[i]);

        AttemptOutcome outcome = std::visit(
            [&](const auto& target) {
                using T = std::decay_t<decltype(target)>;
                if constexpr (std::is_same_v<T, HttpScorer>) {
                    return call_http(target, batch);
                } else {
                    return call_command(target, batch);
                }
            },
            endpoint.target);
        if (!outcome.transport_ok) ++result.transport_errors;

        for (auto& reply : outcome.replies) {
            auto it = index_of.find(reply.id);
            if (it == index_of.end()) continue;
            for (std::size_t i : it->second) {
                ScoreRecord& rec = result.records[i];
                if (rec.score) continue;
                rec.flags = reply.flags;
                rec.score = reply.score;
                rec.error = reply.error;
            }
        }
        std::vector<std::size_t> still;
        for (std::size_t i : pending) {
            ScoreRecord& rec = result.records[i];
            if (rec.score) continue;
            if (rec.error.empty()) rec.error = outcome.error.empty() ? "no score returned" : outcome.error;
            still.push_back(i);
        }
        pending.swap(still);
    }
    for (const auto& r : result.records) {
        if (r.score) {
            ++result.scored;
        } else {
            ++result.unscored;
        }
    }
    return result;
}

}  // namespace datamix::corpus
