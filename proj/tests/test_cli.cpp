#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "datamix/cli/app.hpp"
#include "datamix/common/jsonl.hpp"
#include "datamix/pack/checkpoint.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using datamix::json;
using datamix::cli::run_cli;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("datamix_cli_" + std::to_string(std::rand()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_rows(const fs::path& p, const std::vector<json>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.dump() + "\n";
    write_text(p, s);
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string mix_logs() {
    std::string s = "subset_id,step,perplexity,token_count\n";
    for (int step = 0; step <= 10000; step += 1000) {
        const double x = (step - 4000) / 1000.0;
        const double y = (step - 6000) / 1000.0;
        s += "a," + std::to_string(step) + "," + std::to_string(x * x + 2) + ",100\n";
        s += "b," + std::to_string(step) + "," + std::to_string(y * y + 2) + ",100\n";
    }
    return s;
}

// Writes one input per subcommand and returns each command's flags.
std::map<std::string, std::vector<std::string>> fixtures(const TempDir& d) {
    std::vector<json> docs;
    for (int i = 0; i < 40; ++i) {
        const std::string body = "Paragraph number " + std::to_string(i % 25) +
                                 " talks about rivers, mountains and the weather in some detail.";
        docs.push_back({{"id", "d" + std::to_string(i)},
                        {"text", body + "\n\nShared closing paragraph that appears in many documents here."},
                        {"url", "https://Example.com/page/" + std::to_string(i % 30) + "?utm_source=x"},
                        {"domain", i % 3 ? "web" : "exams"},
                        {"token_count", 1000 + 3000 * (i % 7)}});
    }
    write_rows(d / "docs.jsonl", docs);

    std::vector<json> vecs;
    for (int i = 0; i < 30; ++i) {
        vecs.push_back({{"id", "v" + std::to_string(i)}, {"embedding", {i % 3 * 10.0 + 0.01 * i, 1.0 - 0.02 * i}}});
    }
    write_rows(d / "vecs.jsonl", vecs);
    write_text(d / "logs.csv", mix_logs());

    fs::create_directories(d / "buckets");
    for (int b = 0; b < 5; ++b) {
        std::vector<json> rows;
        for (int i = 0; i < 6; ++i) {
            rows.push_back({{"id", "b" + std::to_string(b) + "-" + std::to_string(i)},
                            {"text", "x"},
                            {"domain", i % 2 ? "web" : "exams"},
                            {"token_count", 100 + 10 * i}});
        }
        write_rows(d / ("buckets/bucket-" + std::to_string(b) + ".jsonl"), rows);
    }

    std::vector<json> responses;
    for (int p = 0; p < 5; ++p) {
        for (int r = 0; r < 6; ++r) {
            responses.push_back({{"prompt_id", "p" + std::to_string(p)},
                                 {"response", "resp" + std::to_string(r)},
                                 {"source_model", "m"},
                                 {"on_policy", r != 1},
                                 {"score", r == 0 ? 9.0 : 2.0 + r % 4}});
        }
    }
    write_rows(d / "responses.jsonl", responses);

    std::vector<json> rollouts;
    for (int i = 0; i < 32; ++i) {
        json attempts = json::array();
        for (int b = 0; b < 5; ++b) attempts.push_back(((i >> b) & 1) != 0);
        rollouts.push_back({{"prompt_id", "q" + std::to_string(i)}, {"attempts", attempts}, {"domain", "math"}});
    }
    write_rows(d / "rollouts.jsonl", rollouts);

    const json schema = json::array({{{"name", "add"}, {"params", {{"a", "number"}, {"b", "number"}}}}});
    const json call = {{"name", "add"}, {"arguments", {{"a", 1}, {"b", 2}}}};
    write_rows(d / "rewards.jsonl",
               {{{"id", "t"}, {"requires_tool", true}, {"output", call}, {"reference", call}, {"schema", schema}},
                {{"id", "s"}, {"requires_tool", false}, {"judge_score", 7.5}}});
    write_rows(d / "math.jsonl", {{{"id", "m1"}, {"response", "\\boxed{1/2}"}, {"reference", "0.5"}},
                                  {{"id", "m2"}, {"response", "no box"}, {"reference", "3"}}});
    write_rows(d / "constraints.jsonl",
               {{{"id", "c1"}, {"response", "one two three"}, {"constraints", {{{"kind", "max_words"}, {"value", 5}}}}}});
    write_rows(d / "samples.jsonl", {{{"id", "a"}, {"token_length", 3000}, {"source", "s"}},
                                     {{"id", "b"}, {"token_length", 4000}, {"source", "s"}},
                                     {{"id", "c"}, {"token_length", 2000}, {"source", "s"}}});

    for (int c = 0; c < 3; ++c) {
        datamix::pack::CheckpointTensorSet set;
        set.tensors["w"] = datamix::pack::Tensor::of_f32({2}, {float(c), float(2 * c)});
        datamix::pack::write_checkpoint(d / ("ckpt" + std::to_string(c) + ".bin"), set);
    }

    const std::string p = d.path.string() + "/";
    return {
        {"clean", {"--in", p + "docs.jsonl"}},
        {"dedup", {"--in", p + "docs.jsonl"}},
        {"cluster", {"--in", p + "vecs.jsonl", "--k", "3"}},
        {"mix-step", {"--logs", p + "logs.csv"}},
        {"bucket", {"--in", p + "docs.jsonl"}},
        {"blend", {"--in", p + "buckets", "--n-units", "20", "--unit", "samples", "--upsample", "exams=2"}},
        {"anneal-plan", {"--targets", "32768,131072", "--prev-steps", "9000", "--pretrain-lr", "0.0003"}},
        {"pairs", {"--in", p + "responses.jsonl"}},
        {"stratify", {"--in", p + "rollouts.jsonl"}},
        {"reward", {"--in", p + "rewards.jsonl"}},
        {"verify-math", {"--in", p + "math.jsonl"}},
        {"check-constraints", {"--in", p + "constraints.jsonl"}},
        {"curriculum", {"--in", p + "rollouts.jsonl", "--stages", "4"}},
        {"pack", {"--in", p + "samples.jsonl"}},
        {"avg-ckpt", {"--in", p + "ckpt0.bin", p + "ckpt1.bin", p + "ckpt2.bin"}},
    };
}

std::string output_bytes(const fs::path& out) {
    if (fs::is_directory(out)) {
        std::string all;
        for (int b = 0; b < 5; ++b) all += read_text(out / ("bucket-" + std::to_string(b) + ".jsonl"));
        return all;
    }
    return read_text(out);
}

}  // namespace

TEST_CASE("every subcommand runs and is independent of the thread count") {
    TempDir d;
    const auto cmds = fixtures(d);
    REQUIRE(cmds.size() == datamix::cli::subcommand_names().size());
    for (const auto& name : datamix::cli::subcommand_names()) {
        INFO(name);
        REQUIRE(cmds.count(name) == 1);
        std::string prev_out;
        std::string prev_report;
        for (const std::string threads : {"1", "4"}) {
            const fs::path out = d / (name + "-t" + threads + (name == "avg-ckpt" ? ".bin" : ".out"));
            std::vector<std::string> args{name, "--seed", "17", "--threads", threads, "--out", out.string()};
            args.insert(args.end(), cmds.at(name).begin(), cmds.at(name).end());
            const Run r = cli(args);
            INFO(r.err);
            REQUIRE(r.code == 0);
            const std::string bytes = output_bytes(out);
            const std::string report = read_text(out.string() + ".report.json");
            CHECK(json::parse(report)["command"] == name);
            if (threads != "1") {
                CHECK(bytes == prev_out);
                CHECK(report == prev_report);
            }
            prev_out = bytes;
            prev_report = report;
        }
    }
}

TEST_CASE("pack subcommand output") {
    TempDir d;
    const auto cmds = fixtures(d);
    std::vector<std::string> args{"pack", "--out", (d / "packed.jsonl").string()};
    args.insert(args.end(), cmds.at("pack").begin(), cmds.at("pack").end());
    REQUIRE(cli(args).code == 0);
    const auto rows = datamix::read_jsonl(d / "packed.jsonl");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0]["segments"].size() == 2);
    CHECK(rows[1]["segments"].size() == 1);
}

TEST_CASE("mix-step advances the round from a state file") {
    TempDir d;
    write_text(d / "logs.csv", mix_logs());
    const std::string state = (d / "state.json").string();
    REQUIRE(cli({"mix-step", "--logs", (d / "logs.csv").string(), "--out", state}).code == 0);
    CHECK(json::parse(read_text(state))["round"] == 1);
    const std::string next = (d / "state2.json").string();
    REQUIRE(cli({"mix-step", "--logs", (d / "logs.csv").string(), "--state", state, "--out", next}).code == 0);
    const json s2 = json::parse(read_text(next));
    CHECK(s2["round"] == 2);
    // b bottoms out 2000 steps after a, so it gains weight.
    CHECK(s2["proportions"]["b"].get<double>() > s2["proportions"]["a"].get<double>());
}

TEST_CASE("invalid configuration fails fast with the offending field") {
    TempDir d;
    write_text(d / "logs.csv", mix_logs());
    write_text(d / "cfg.json", R"({"mix": {"kappa": -1}})");
    const Run r = cli({"mix-step", "--config", (d / "cfg.json").string(), "--logs", (d / "logs.csv").string(),
                       "--out", (d / "s.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("mix.kappa") != std::string::npos);
    CHECK(!fs::exists(d / "s.json"));

    write_text(d / "cfg2.json", R"({"mix": {"kapa": 3}})");
    const Run typo = cli({"mix-step", "--config", (d / "cfg2.json").string(), "--logs", (d / "logs.csv").string(),
                          "--out", (d / "s.json").string()});
    CHECK(typo.code == 1);
    CHECK(typo.err.find("mix.kapa") != std::string::npos);
}

TEST_CASE("boolean and nested config keys load") {
    TempDir d;
    write_text(d / "s.jsonl", "{\"id\": \"a\", \"token_length\": 9000, \"source\": \"s\"}\n");
    write_text(d / "cfg.json", R"({"seed": 7, "mix": {"kappa": 10, "mu": 15000},
        "blend": {"short_fraction": 0.7, "unit": "tokens", "domain_upsample": {"exams": 2.0}},
        "pack": {"max_len": 8192, "mode": "sft", "strict": false}})");
    const Run r = cli({"pack", "--config", (d / "cfg.json").string(), "--in", (d / "s.jsonl").string(), "--out",
                       (d / "o.jsonl").string()});
    INFO(r.err);
    CHECK(r.code == 0);
    CHECK(datamix::read_jsonl(d / "o.jsonl")[0]["segments"][0]["truncated"] == true);

    write_text(d / "bad.json", R"({"pack": {"strict": 1}})");
    const Run bad = cli({"pack", "--config", (d / "bad.json").string(), "--in", (d / "s.jsonl").string(), "--out",
                         (d / "o.jsonl").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("pack.strict") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"pack", "--in", "x.jsonl"}).code == 2);
}

TEST_CASE("input errors exit with code 1") {
    TempDir d;
    write_text(d / "bad.jsonl", "{\"id\": \"a\", \"token_length\": 9000, \"source\": \"s\"}\n");
    const Run r = cli({"pack", "--in", (d / "bad.jsonl").string(), "--out", (d / "o").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("sample_too_long") != std::string::npos);
    CHECK(cli({"pack", "--in", (d / "missing.jsonl").string(), "--out", (d / "o").string()}).code == 1);
}

TEST_CASE("the installed binary reports exit codes") {
    const std::string bin = DATAMIX_CLI_PATH;
    CHECK(WEXITSTATUS(std::system((bin + " frobnicate >/dev/null 2>&1").c_str())) == 2);
    CHECK(WEXITSTATUS(std::system((bin + " --help >/dev/null 2>&1").c_str())) == 0);
    TempDir d;
    write_text(d / "s.jsonl", "{\"id\": \"a\", \"token_length\": 10, \"source\": \"s\"}\n");
    const std::string cmd = bin + " pack --in " + (d / "s.jsonl").string() + " --out " + (d / "o.jsonl").string() +
                            " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(d / "o.jsonl.report.json"));
}
