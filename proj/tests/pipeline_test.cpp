// End-to-end orchestration over the fixture mini-repositories: the full
// search -> select -> adapt -> emit funnel in record mode, idempotent reruns,
// offline replay from a second directory with a shared recording cache,
// byte-stable re-runs, interrupt/resume, and the configuration guards.
#include <catch2/catch_amalgamated.hpp>

#include <autosdt/config.hpp>
#include <autosdt/dataset.hpp>
#include <autosdt/pipeline.hpp>

#include "support/oracle_provider.hpp"
#include "support/temp_dir.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace autosdt;
using Catch::Matchers::ContainsSubstring;

namespace {

fs::path fixture_root() {
    if (const char* env = std::getenv("AUTOSDT_FIXTURE_DIR"); env && *env) return fs::path(env);
#ifdef AUTOSDT_TEST_FIXTURES
    return fs::path(AUTOSDT_TEST_FIXTURES);
#else
    return fs::path("tests/fixtures");
#endif
}

// Two disciplines over both fixture hosts, with the benchmark-overlap
// exclusion list active. Everything lives under `root` except the recording
// cache, which callers share between runs to prove record -> replay parity.
PipelineConfig fixture_config(const fs::path& root, GatewayMode mode, const fs::path& cache) {
    PipelineConfig cfg;
    cfg.mode = mode;
    Discipline bio;
    bio.id = "computational-biology";
    bio.seed_keywords = {"circRNA", "RNA-seq"};
    Discipline geo;
    geo.id = "geoinformatics";
    geo.seed_keywords = {"drone imagery"};
    cfg.disciplines = {bio, geo};
    cfg.hosts = {Host::github, Host::paperswithcode};
    cfg.github_fixture = fixture_root() / "hosts" / "github.json";
    cfg.pwc_fixture = fixture_root() / "hosts" / "paperswithcode.json";
    cfg.exclude_file = fixture_root() / "exclude.txt";
    cfg.exec_timeout_s = 60;
    cfg.workers = 2;
    cfg.state_dir = root / "state";
    cfg.cache_dir = cache;
    cfg.out_dir = root / "out";
    cfg.general_model = "general-test-model";
    cfg.coder_model = "coder-test-model";
    cfg.general_input_rate = "2.50";
    cfg.general_output_rate = "10.00";
    cfg.coder_input_rate = "3.00";
    cfg.coder_output_rate = "15.00";
    return cfg;
}

std::string slurp(const fs::path& p) {
    auto body = read_file(p);
    REQUIRE(body);
    return *body;
}

std::vector<json> jsonl_rows(const fs::path& p) {
    std::vector<json> rows;
    for (const auto& line : split_lines(slurp(p))) {
        if (trim(line).empty()) continue;
        rows.push_back(json::parse(line));
    }
    return rows;
}

} // namespace

TEST_CASE("pipeline runs the fixture corpus end to end", "[pipeline]") {
    testutil::TempDir tmp("pipeline");
    fs::path cache = tmp / "cache";
    auto cfg = fixture_config(tmp / "a", GatewayMode::record, cache);

    // --- record run: full funnel against the deterministic oracle ---
    auto provider = std::make_unique<testutil::OracleProvider>();
    testutil::OracleProvider* oracle = provider.get();
    PipelineRunner runner(cfg, std::move(provider));
    auto reports = runner.run_all();

    REQUIRE(reports.size() == 4);
    for (const auto& r : reports) {
        INFO(r.stage << " deferred: " << r.defer_reason);
        CHECK(r.completed);
    }
    CHECK(reports[0].notes ==
          std::vector<std::string>{"10 queries across 2 discipline(s)",
                                   "8 hits, 5 unique after dedupe and exclusion",
                                   "4 of 5 classified as research"});
    CHECK(reports[1].notes ==
          std::vector<std::string>{"4 research repo(s), 0 unavailable",
                                   "9 .py files, 6 past the rule filter, 4 judged scientific",
                                   "4 workspace(s) built"});
    CHECK(reports[2].notes == std::vector<std::string>{"3 of 4 candidate(s) adapted; 1 discarded"});
    CHECK(reports[3].notes == std::vector<std::string>{"3 task(s) emitted; corpus holds 3"});
    // 2 expansions + 5 classifications + 6 science verdicts + 4 dependency
    // scans + 7 adaptation rounds (1+1+3+2) + 3 instructions.
    CHECK(oracle->calls() == 27);
    CHECK(reports[0].processed == 18); // 2 + 10 + 5 + finalize
    CHECK(reports[1].processed == 5);  // 4 repos + finalize
    CHECK(reports[2].processed == 5);  // 4 workspaces + finalize
    CHECK(reports[3].processed == 3);
    CHECK(fs::exists(run_state_path(cfg.state_dir, run_id_for(cfg))));

    // --- repos.jsonl: every unique repository with its verdict ---
    auto repos = jsonl_rows(cfg.out_dir / "repos.jsonl");
    REQUIRE(repos.size() == 5);
    std::vector<std::string> repo_keys;
    for (const auto& r : repos)
        repo_keys.push_back(r.at("owner").get<std::string>() + "/" +
                            r.at("name").get<std::string>());
    CHECK(repo_keys == std::vector<std::string>{"fixlab/circ-rwr", "toolguy/web-scraper",
                                                "fixlab/sci-utils", "simlab/hard-sim",
                                                "geolab/drone-match"});
    CHECK(repos[0].at("found_by_queries") == json::array({"circRNA", "disease association"}));
    CHECK(repos[0].at("research_verdict") == "research");
    CHECK(repos[0].at("paper_links") == json::array({"https://arxiv.org/abs/2101.00001"}));
    CHECK(repos[1].at("research_verdict") == "not_research");
    CHECK(repos[4].at("host") == "paperswithcode");
    CHECK(repos[4].at("found_by_queries") == json::array({"drone imagery", "image matching"}));
    // The host supplied these links, so classification must not overwrite them.
    CHECK(repos[4].at("paper_links") == json::array({"https://arxiv.org/abs/2099.12345"}));

    // --- candidates.jsonl: rule filter + science judgment per .py file ---
    auto cands = jsonl_rows(cfg.out_dir / "candidates.jsonl");
    REQUIRE(cands.size() == 9);
    int kept = 0, science = 0;
    for (const auto& c : cands) {
        if (c.at("rule_verdict") == "kept") ++kept;
        if (c.at("science_verdict") == "science_yes") ++science;
    }
    CHECK(kept == 6);
    CHECK(science == 4);
    CHECK(cands[0].at("rel_path") == "RWR.py");
    CHECK(cands[0].at("dataset_paths") == json::array({"data/circrna_disease.txt"}));
    CHECK(cands[2].at("rel_path") == "utils/helper.py");
    CHECK(cands[2].at("rule_verdict") == "dropped_dir");
    CHECK(cands[3].at("rel_path") == "bigfile.py");
    CHECK(cands[3].at("rule_verdict") == "dropped_lines");
    CHECK(cands[5].at("rel_path") == "util_classes.py");
    CHECK(cands[5].at("science_verdict") == "science_no");
    CHECK(cands[7].at("rel_path") == "lib/helpers.py");
    CHECK(cands[7].at("science_verdict") == "science_no");
    CHECK(cands[8].at("rel_path") == "match.py");
    CHECK(cands[8].at("module_paths") == json::array({"lib"}));

    // --- adapted.jsonl: per-workspace loop outcomes in item order ---
    auto adapted = jsonl_rows(cfg.out_dir / "adapted.jsonl");
    REQUIRE(adapted.size() == 4);
    CHECK(adapted[0].at("state").at("iteration") == 1); // RWR.py: first try
    CHECK_FALSE(adapted[0].at("draft").is_null());
    CHECK(adapted[1].at("state").at("iteration") == 1); // centrality.py: first try
    CHECK(adapted[2].at("state").at("status") == "discarded"); // simulate.py: exhausted
    CHECK(adapted[2].at("state").at("iteration") == 3);
    CHECK(adapted[2].at("draft").is_null());
    CHECK_THAT(adapted[2].at("state").at("last_error").get<std::string>(),
               ContainsSubstring("lattice relaxation diverged"));
    CHECK(adapted[3].at("state").at("iteration") == 2); // match.py: one repair round
    CHECK_FALSE(adapted[3].at("draft").is_null());

    // --- tasks.jsonl: the emitted corpus ---
    auto tasks = load_corpus(cfg.out_dir / "tasks.jsonl");
    REQUIRE(tasks.size() == 3);
    CHECK(tasks[0].task_id == task_id_for("fixlab/circ-rwr", "RWR.py"));
    CHECK(tasks[0].discipline_id == "computational-biology");
    CHECK(tasks[0].iterations_used == 1);
    CHECK(tasks[0].requirements.empty());
    CHECK(tasks[0].output_files == std::vector<std::string>{"pred_results/pred_RWR.csv"});
    CHECK(tasks[0].license_id == "MIT");
    CHECK(tasks[0].repo_url == "https://github.test/fixlab/circ-rwr");
    CHECK_THAT(tasks[0].instruction, ContainsSubstring("circrna_disease.txt"));
    CHECK_THAT(tasks[0].instruction, ContainsSubstring("pred_results/pred_RWR.csv"));
    CHECK(tasks[1].task_id == task_id_for("fixlab/circ-rwr", "centrality.py"));
    CHECK(tasks[2].task_id == task_id_for("geolab/drone-match", "match.py"));
    CHECK(tasks[2].discipline_id == "geoinformatics");
    CHECK(tasks[2].iterations_used == 2);
    CHECK(tasks[2].license_id == "Apache-2.0");
    CHECK_THAT(tasks[2].instruction, ContainsSubstring("points.csv"));
    CHECK(tasks[2].provenance.at("run_id") == run_id_for(cfg));
    CHECK(tasks[2].provenance.at("config_hash") == config_hash(cfg));
    CHECK(tasks[2].provenance.at("models").at("coder") == "coder-test-model");
    CHECK_FALSE(tasks[2].provenance.contains("weak_instruction"));

    // --- workspace tree for the repaired candidate ---
    fs::path ws = cfg.out_dir / "workspaces" / task_id_for("geolab/drone-match", "match.py");
    fs::path data_root = ws / "benchmark" / "datasets" / "drone-match";
    CHECK(fs::exists(data_root / "match.py"));
    CHECK(fs::exists(data_root / "data" / "points.csv"));
    CHECK(fs::exists(data_root / "lib" / "helpers.py"));
    CHECK_FALSE(fs::exists(data_root / "README.md")); // only declared dependencies travel
    CHECK(fs::exists(ws / "pred_results" / "pred_match.csv"));

    Usd record_total = runner.gateway().ledger().total();
    CHECK(record_total.to_string() != Usd().to_string());

    // --- rerun of the same config: everything checkpointed, zero model calls ---
    std::string task_bytes = slurp(cfg.out_dir / "tasks.jsonl");
    auto provider2 = std::make_unique<testutil::OracleProvider>();
    testutil::OracleProvider* oracle2 = provider2.get();
    PipelineRunner rerun(cfg, std::move(provider2));
    auto rerun_reports = rerun.run_all();
    REQUIRE(rerun_reports.size() == 4);
    for (const auto& r : rerun_reports) {
        CHECK(r.completed);
        CHECK(r.processed == 0);
    }
    CHECK(rerun_reports[0].skipped == 18);
    CHECK(rerun_reports[3].skipped == 3);
    CHECK(oracle2->calls() == 0);
    CHECK(slurp(cfg.out_dir / "tasks.jsonl") == task_bytes);

    // --- offline replay from a different directory, shared cache, no provider ---
    auto cfg_b = fixture_config(tmp / "b", GatewayMode::replay, cache);
    PipelineRunner replay(cfg_b, nullptr);
    auto replay_reports = replay.run_all();
    REQUIRE(replay_reports.size() == 4);
    for (const auto& r : replay_reports) {
        INFO(r.stage << " deferred: " << r.defer_reason);
        CHECK(r.completed);
    }
    auto tasks_b = load_corpus(cfg_b.out_dir / "tasks.jsonl");
    REQUIRE(tasks_b.size() == 3);
    for (std::size_t i = 0; i < tasks_b.size(); ++i) {
        CHECK(tasks_b[i].task_id == tasks[i].task_id);
        CHECK(tasks_b[i].adapted_code == tasks[i].adapted_code);
        CHECK(tasks_b[i].instruction == tasks[i].instruction);
        CHECK(tasks_b[i].iterations_used == tasks[i].iterations_used);
    }
    // Replay accrues the recorded usage, so the bill matches the record run.
    CHECK(replay.gateway().ledger().total().to_string() == record_total.to_string());
    // Artifacts that carry no run identity are byte-identical across roots.
    // (adapted.jsonl and tasks.jsonl embed provenance — run id and config
    // hash — which legitimately differ between directory layouts.)
    CHECK(slurp(cfg_b.out_dir / "repos.jsonl") == slurp(cfg.out_dir / "repos.jsonl"));
    CHECK(slurp(cfg_b.out_dir / "candidates.jsonl") == slurp(cfg.out_dir / "candidates.jsonl"));

    // --- wiping state and outputs and replaying again reproduces the corpus
    //     byte for byte ---
    std::string tasks_b_bytes = slurp(cfg_b.out_dir / "tasks.jsonl");
    std::string adapted_b_bytes = slurp(cfg_b.out_dir / "adapted.jsonl");
    fs::remove_all(cfg_b.state_dir);
    fs::remove_all(cfg_b.out_dir);
    PipelineRunner replay2(cfg_b, nullptr);
    auto replay2_reports = replay2.run_all();
    REQUIRE(replay2_reports.size() == 4);
    for (const auto& r : replay2_reports) CHECK(r.completed);
    CHECK(slurp(cfg_b.out_dir / "tasks.jsonl") == tasks_b_bytes);
    CHECK(slurp(cfg_b.out_dir / "adapted.jsonl") == adapted_b_bytes);
}

TEST_CASE("pipeline stops at an interrupt and resumes from checkpoints", "[pipeline]") {
    testutil::TempDir tmp("pipeline-intr");
    auto cfg = fixture_config(tmp / "w", GatewayMode::record, tmp / "cache");

    // Trip the abort hook on the seventh poll: past keyword expansion, inside
    // the parallel query phase, so in-flight work gets drained uncommitted.
    std::atomic<int> budget{6};
    auto abort_soon = [&budget] { return budget.fetch_sub(1) <= 0; };
    PipelineRunner first(cfg, std::make_unique<testutil::OracleProvider>(), ignore_warnings,
                         abort_soon);
    auto stopped = first.run_search();
    CHECK_FALSE(stopped.completed);
    CHECK(stopped.defer_reason == "interrupted");
    CHECK(stopped.processed >= 2); // both keyword expansions commit before the trip
    CHECK_FALSE(fs::exists(cfg.out_dir / "repos.jsonl"));

    PipelineRunner second(cfg, std::make_unique<testutil::OracleProvider>());
    auto resumed = second.run_search();
    CHECK(resumed.completed);
    CHECK(resumed.skipped == stopped.processed);
    CHECK(resumed.skipped + resumed.processed == 18);
    auto repos = jsonl_rows(cfg.out_dir / "repos.jsonl");
    REQUIRE(repos.size() == 5);
    int research = 0;
    for (const auto& r : repos)
        if (r.at("research_verdict") == "research") ++research;
    CHECK(research == 4);
}

TEST_CASE("pipeline stage gating and configuration guards", "[pipeline]") {
    testutil::TempDir tmp("pipeline-cfg");
    auto cfg = fixture_config(tmp / "w", GatewayMode::replay, tmp / "cache");

    SECTION("each stage demands its predecessor's artifact") {
        PipelineRunner r(cfg, nullptr);
        REQUIRE_THROWS_WITH(r.run_select(), ContainsSubstring("run the search stage first"));
        REQUIRE_THROWS_WITH(r.run_adapt(), ContainsSubstring("run the select stage first"));
        REQUIRE_THROWS_WITH(r.run_emit(), ContainsSubstring("run the adapt stage first"));
    }

    SECTION("replay mode refuses a host without a fixture") {
        cfg.github_fixture.clear();
        REQUIRE_THROWS_AS(PipelineRunner(cfg, nullptr), ConfigError);
        REQUIRE_THROWS_WITH(PipelineRunner(cfg, nullptr),
                            ContainsSubstring("replay mode runs offline"));
    }

    SECTION("a fixture for the wrong host is rejected") {
        cfg.github_fixture = fixture_root() / "hosts" / "paperswithcode.json";
        REQUIRE_THROWS_WITH(PipelineRunner(cfg, nullptr),
                            ContainsSubstring("declares host 'paperswithcode'"));
    }

    SECTION("live github search requires the token up front") {
        unsetenv("AUTOSDT_GITHUB_TOKEN");
        cfg.mode = GatewayMode::live;
        cfg.github_fixture.clear();
        REQUIRE_THROWS_WITH(PipelineRunner(cfg, std::make_unique<testutil::OracleProvider>()),
                            ContainsSubstring("AUTOSDT_GITHUB_TOKEN"));
    }

    SECTION("a config without disciplines is rejected") {
        cfg.disciplines.clear();
        REQUIRE_THROWS_WITH(PipelineRunner(cfg, nullptr),
                            ContainsSubstring("no disciplines configured"));
    }

    SECTION("state written by a different configuration is refused") {
        PipelineRun foreign;
        foreign.run_id = "run-somebodyelse";
        foreign.config_hash = "feedfacefeedface";
        json doc;
        doc["run"] = encode_run(foreign);
        doc["ledger"] = CostLedger().encode();
        fs::create_directories(cfg.state_dir);
        write_file(run_state_path(cfg.state_dir, run_id_for(cfg)), doc.dump(2) + "\n");
        REQUIRE_THROWS_WITH(PipelineRunner(cfg, nullptr),
                            ContainsSubstring("was produced by a different configuration"));
    }

    SECTION("a corrupt state file is reported, not silently restarted") {
        fs::create_directories(cfg.state_dir);
        write_file(run_state_path(cfg.state_dir, run_id_for(cfg)), "{not json");
        REQUIRE_THROWS_AS(PipelineRunner(cfg, nullptr), SchemaError);
    }
}
