#include <autosdt/select.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "support/scripted_provider.hpp"
#include "support/temp_dir.hpp"

#include <filesystem>
#include <random>
#include <set>

using namespace autosdt;
using testutil::ScriptedProvider;
using testutil::TempDir;

namespace fs = std::filesystem;

namespace {

std::unique_ptr<Gateway> live_gateway(ScriptedProvider::ReplyFn fn, ScriptedProvider** out,
                                      const std::filesystem::path& dir) {
    auto provider = std::make_unique<ScriptedProvider>(std::move(fn));
    *out = provider.get();
    return std::make_unique<Gateway>(
        testutil::fast_gateway_config(GatewayMode::live, dir), std::move(provider));
}

// Builds a small on-disk repo and returns its snapshot-ready RepoRef.
RepoRef write_mini_repo(const fs::path& root) {
    write_file(root / "analysis.py", "import pandas\nprint('analysis')\n");
    write_file(root / "data" / "points.csv", "x,y\n1,2\n3,4\n");
    write_file(root / "data" / "extra" / "more.csv", "a\n9\n");
    write_file(root / "lib" / "helpers.py", "def helper():\n    return 1\n");
    write_file(root / "tests" / "test_analysis.py", "def test():\n    pass\n");
    write_file(root / "README.md", "# mini\n");
    RepoRef repo;
    repo.owner = "FixLab";
    repo.name = "Mini-Repo";
    repo.url = "https://github.test/FixLab/Mini-Repo";
    repo.stars = 22;
    return repo;
}

std::string big_python_file(std::size_t lines) {
    std::string out;
    for (std::size_t i = 0; i < lines; ++i) out += "x = " + std::to_string(i) + "\n";
    return out;
}

} // namespace

TEST_CASE("snapshotting a local source indexes every regular file", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo = write_mini_repo(src);
    // Noise the copy must ignore: vcs metadata and symlinks.
    write_file(src / ".git" / "config", "[core]\n");
    std::error_code ec;
    fs::create_symlink(src / "README.md", src / "readme-link", ec);

    auto snap = snapshot_repo(repo, dir.path() / "snap", src);

    CHECK(snap.repo_key == "fixlab/mini-repo");
    CHECK(snap.repo_name == "Mini-Repo");
    REQUIRE(snap.file_tree.size() == 6);
    CHECK(snap.file_tree.front().path == "README.md"); // sorted
    CHECK(snap.has_file("data/points.csv"));
    CHECK(snap.has_dir("data"));
    CHECK(snap.has_dir("data/"));
    CHECK_FALSE(snap.has_dir("data/points.csv"));
    CHECK_FALSE(snap.has_file("ghost.csv"));
    std::uint64_t sum = 0;
    for (const auto& e : snap.file_tree) sum += e.bytes;
    CHECK(snap.total_bytes == sum);
    CHECK(snap.total_bytes > 0);

    // file:// URLs take the same offline path.
    RepoRef by_url = repo;
    by_url.url = "file://" + src.string();
    auto snap2 = snapshot_repo(by_url, dir.path() / "snap2");
    CHECK(snap2.file_tree.size() == 6);

    auto empty_src = dir.path() / "empty";
    fs::create_directories(empty_src);
    RepoRef empty_repo = repo;
    auto snap3 = snapshot_repo(empty_repo, dir.path() / "snap3", empty_src);
    CHECK(snap3.file_tree.empty());
    CHECK(snap3.total_bytes == 0);

    CHECK_THROWS_AS(snapshot_repo(repo, dir.path() / "snap4", dir.path() / "missing"), Gone);
}

TEST_CASE("cloning an unreachable url fails as CloneFailed", "[select]") {
    TempDir dir;
    RepoRef repo;
    repo.owner = "nobody";
    repo.name = "nowhere";
    repo.url = dir.path().string() + "/definitely-missing"; // git treats as local path: absent
    CHECK_THROWS_AS(snapshot_repo(repo, dir.path() / "snap", std::nullopt, 30), CloneFailed);
}

TEST_CASE("rule filter partitions python files by directory and length", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo = write_mini_repo(src);
    write_file(src / "long" / "huge.py", big_python_file(1001));
    write_file(src / "exactly.py", big_python_file(1000));
    write_file(src / "src" / "tests" / "helper.py", "pass\n");

    auto snap = snapshot_repo(repo, dir.path() / "snap", src);
    auto candidates = rule_filter_files(snap, DirectoryDenyList::defaults());

    REQUIRE(candidates.size() == 6); // every .py appears exactly once
    std::map<std::string, RuleVerdict> verdicts;
    for (const auto& c : candidates) {
        CHECK(c.repo_key == "fixlab/mini-repo");
        verdicts[c.rel_path] = c.rule_verdict;
    }
    CHECK(verdicts.at("analysis.py") == RuleVerdict::kept);
    CHECK(verdicts.at("lib/helpers.py") == RuleVerdict::kept);
    CHECK(verdicts.at("exactly.py") == RuleVerdict::kept); // boundary: 1000 lines stays
    CHECK(verdicts.at("long/huge.py") == RuleVerdict::dropped_lines);
    CHECK(verdicts.at("tests/test_analysis.py") == RuleVerdict::dropped_dir);
    CHECK(verdicts.at("src/tests/helper.py") == RuleVerdict::dropped_dir);

    // Lexicographic output order.
    std::vector<std::string> order;
    for (const auto& c : candidates) order.push_back(c.rel_path);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(order == sorted);

    // Deny matching is exact per segment, case-folded — not substring.
    write_file(src / "contest" / "entry.py", "print(1)\n");
    write_file(src / "TESTS" / "upper.py", "print(1)\n");
    auto snap2 = snapshot_repo(repo, dir.path() / "snap2", src);
    auto candidates2 = rule_filter_files(snap2, DirectoryDenyList::defaults());
    std::map<std::string, RuleVerdict> verdicts2;
    for (const auto& c : candidates2) verdicts2[c.rel_path] = c.rule_verdict;
    CHECK(verdicts2.at("contest/entry.py") == RuleVerdict::kept);
    CHECK(verdicts2.at("TESTS/upper.py") == RuleVerdict::dropped_dir);
}

TEST_CASE("rule filter respects a custom line budget", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo;
    repo.owner = "o";
    repo.name = "n";
    write_file(src / "five.py", big_python_file(5));
    write_file(src / "six.py", big_python_file(6));
    auto snap = snapshot_repo(repo, dir.path() / "snap", src);
    auto candidates = rule_filter_files(snap, DirectoryDenyList::defaults(), 5);
    REQUIRE(candidates.size() == 2);
    CHECK(candidates[0].rule_verdict == RuleVerdict::kept);
    CHECK(candidates[1].rule_verdict == RuleVerdict::dropped_lines);
    CHECK(candidates[1].line_count == 6);
}

TEST_CASE("science judgment parses the verdict and is conservative when garbled", "[select]") {
    TempDir dir;
    ScriptedProvider* provider = nullptr;
    auto gw = live_gateway(
        [](const ScriptedProvider::Call& call) {
            if (contains(call.prompt, "train_model.py"))
                return ScriptedProvider::canned("VERDICT: YES");
            return ScriptedProvider::canned("VERDICT: NO");
        },
        &provider, dir.path());

    CandidateFile science;
    science.repo_key = "lab/repo";
    science.rel_path = "src/train_model.py";
    science.rule_verdict = RuleVerdict::kept;
    CHECK(judge_scientific(*gw, science, "import pandas\n...train and save metrics...") ==
          ScienceVerdict::science_yes);
    CHECK(science.science_verdict == ScienceVerdict::science_yes);
    // The prompt binds the basename, not the repo path.
    CHECK(contains(provider->calls()[0].prompt, "train_model.py"));
    CHECK(provider->calls()[0].temperature == 0.0);

    CandidateFile utility;
    utility.repo_key = "lab/repo";
    utility.rel_path = "helpers.py";
    utility.rule_verdict = RuleVerdict::kept;
    CHECK(judge_scientific(*gw, utility, "def pad(x): return x") ==
          ScienceVerdict::science_no);

    CandidateFile dropped;
    dropped.repo_key = "lab/repo";
    dropped.rel_path = "dropped.py";
    dropped.rule_verdict = RuleVerdict::dropped_lines;
    CHECK_THROWS_AS(judge_scientific(*gw, dropped, "x"), Error);
}

TEST_CASE("science judgment drops after two malformed replies", "[select]") {
    TempDir dir;
    ScriptedProvider* provider = nullptr;
    auto gw = live_gateway(
        [](const ScriptedProvider::Call&) { return ScriptedProvider::canned("who knows"); },
        &provider, dir.path());
    CandidateFile c;
    c.repo_key = "lab/repo";
    c.rel_path = "a.py";
    c.rule_verdict = RuleVerdict::kept;
    std::vector<std::string> warnings;
    CHECK(judge_scientific(*gw, c, "code", [&](const std::string& w) { warnings.push_back(w); }) ==
          ScienceVerdict::science_no);
    CHECK(provider->calls().size() == 2);
    REQUIRE(warnings.size() == 1);
}

TEST_CASE("dependency location validates paths against the tree", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo = write_mini_repo(src);
    auto snap = snapshot_repo(repo, dir.path() / "snap", src);

    ScriptedProvider* provider = nullptr;
    auto gw = live_gateway(
        [](const ScriptedProvider::Call&) {
            return ScriptedProvider::canned(
                "DATASET_LABEL: Yes\n"
                "DATASET_PATHS: [data/points.csv, ghost.csv]\n"
                "MODULE_LABEL: Yes\n"
                "MODULE_PATHS: [./lib/helpers.py, data/extra/]");
        },
        &provider, dir.path());

    CandidateFile c;
    c.repo_key = snap.repo_key;
    c.rel_path = "analysis.py";
    c.rule_verdict = RuleVerdict::kept;
    c.science_verdict = ScienceVerdict::science_yes;

    std::vector<std::string> warnings;
    bool kept = locate_dependencies(*gw, c, "import pandas", snap,
                                    [&](const std::string& w) { warnings.push_back(w); });

    REQUIRE(kept);
    CHECK(c.dataset_label == DatasetLabel::local_files);
    CHECK(c.dataset_paths == std::vector<std::string>{"data/points.csv"}); // ghost dropped
    // "./" and trailing "/" both normalize away; the directory answer stays.
    CHECK(c.module_paths == std::vector<std::string>{"lib/helpers.py", "data/extra"});
    REQUIRE(warnings.size() == 1);
    CHECK(contains(warnings[0], "ghost.csv"));
    // The prompt embeds the tree listing.
    CHECK(contains(provider->calls()[0].prompt, "data/points.csv"));
    CHECK(contains(provider->calls()[0].prompt, "lib/helpers.py"));
}

TEST_CASE("dependency location maps label combinations", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo = write_mini_repo(src);
    auto snap = snapshot_repo(repo, dir.path() / "snap", src);

    auto run_with_reply = [&](const std::string& reply) {
        ScriptedProvider* provider = nullptr;
        auto gw = live_gateway(
            [reply](const ScriptedProvider::Call&) { return ScriptedProvider::canned(reply); },
            &provider, dir.path());
        CandidateFile c;
        c.repo_key = snap.repo_key;
        c.rel_path = "analysis.py";
        c.rule_verdict = RuleVerdict::kept;
        c.science_verdict = ScienceVerdict::science_yes;
        bool kept = locate_dependencies(*gw, c, "code", snap);
        return std::make_pair(kept, c);
    };

    // Built-in loader: dataset yes, no local paths.
    auto [kept1, c1] = run_with_reply(
        "DATASET_LABEL: Yes\nDATASET_PATHS: []\nMODULE_LABEL: No\nMODULE_PATHS: []");
    CHECK(kept1);
    CHECK(c1.dataset_label == DatasetLabel::builtin_loader);
    CHECK(c1.dataset_paths.empty());

    // No dataset at all.
    auto [kept2, c2] = run_with_reply(
        "DATASET_LABEL: No\nDATASET_PATHS: [data/points.csv]\nMODULE_LABEL: No\nMODULE_PATHS: []");
    CHECK(kept2);
    CHECK(c2.dataset_label == DatasetLabel::none);
    CHECK(c2.dataset_paths.empty()); // a No label wins over stray paths

    // Unparseable twice: candidate dropped with a reason.
    auto [kept3, c3] = run_with_reply("cannot comply");
    CHECK_FALSE(kept3);
    CHECK(c3.dropped_reason == "dependency location unparseable twice");
}

TEST_CASE("tree listings cap at the entry budget", "[select]") {
    std::vector<std::string> paths;
    for (int i = 0; i < 4500; ++i) paths.push_back("f" + std::to_string(i) + ".txt");
    auto listing = render_tree_listing(paths);
    CHECK(contains(listing, "f3999.txt"));
    CHECK_FALSE(contains(listing, "f4000.txt"));
    CHECK(ends_with(listing, "[... truncated ...]"));

    auto small = render_tree_listing({"a.txt", "b.txt"});
    CHECK(small == "a.txt\nb.txt");
}

TEST_CASE("workspaces copy exactly the declared closure", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo = write_mini_repo(src);
    // Padding that must not reach the workspace.
    write_file(src / "assets" / "big.bin", std::string(100000, 'B'));
    auto snap = snapshot_repo(repo, dir.path() / "snap", src);

    CandidateFile c;
    c.repo_key = snap.repo_key;
    c.rel_path = "analysis.py";
    c.rule_verdict = RuleVerdict::kept;
    c.science_verdict = ScienceVerdict::science_yes;
    c.dataset_label = DatasetLabel::local_files;
    c.dataset_paths = {"data"}; // a directory: expanded at copy time
    c.module_paths = {"lib/helpers.py"};

    auto ws_root = dir.path() / "ws";
    auto ws = build_workspace(snap, c, ws_root);

    CHECK(ws.root == ws_root.string());
    CHECK(ws.copied_paths == std::vector<std::string>{"analysis.py", "data/extra/more.csv",
                                                      "data/points.csv", "lib/helpers.py"});
    CHECK(fs::is_directory(ws_root / "pred_results"));
    CHECK(fs::is_empty(ws_root / "pred_results"));
    auto base = ws_root / "benchmark" / "datasets" / "Mini-Repo";
    CHECK(fs::exists(base / "analysis.py"));
    CHECK(fs::exists(base / "data" / "points.csv"));
    CHECK(fs::exists(base / "data" / "extra" / "more.csv"));
    CHECK(fs::exists(base / "lib" / "helpers.py"));
    CHECK_FALSE(fs::exists(base / "assets" / "big.bin"));
    CHECK_FALSE(fs::exists(base / "README.md"));

    // byte_size covers exactly the copied files and beats the full snapshot.
    std::uint64_t expected = 0;
    for (const auto& rel : ws.copied_paths) expected += fs::file_size(src / rel);
    CHECK(ws.byte_size == expected);
    CHECK(ws.byte_size < snap.total_bytes);

    // Re-walk: nothing beyond the declared closure materialized.
    std::set<std::string> walked;
    for (const auto& rel : list_files(base)) walked.insert(rel);
    CHECK(walked == std::set<std::string>(ws.copied_paths.begin(), ws.copied_paths.end()));
}

TEST_CASE("workspace with zero dependencies holds just the candidate", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo = write_mini_repo(src);
    auto snap = snapshot_repo(repo, dir.path() / "snap", src);

    CandidateFile c;
    c.repo_key = snap.repo_key;
    c.rel_path = "analysis.py";

    auto ws = build_workspace(snap, c, dir.path() / "ws");
    CHECK(ws.copied_paths == std::vector<std::string>{"analysis.py"});
    auto base = dir.path() / "ws" / "benchmark" / "datasets" / "Mini-Repo";
    CHECK(list_files(base) == std::vector<std::string>{"analysis.py"});
    CHECK(fs::is_directory(dir.path() / "ws" / "pred_results"));
}

TEST_CASE("workspace builder rejects traversal and phantom paths", "[select]") {
    TempDir dir;
    auto src = dir.path() / "src";
    RepoRef repo = write_mini_repo(src);
    auto snap = snapshot_repo(repo, dir.path() / "snap", src);

    CandidateFile escape;
    escape.repo_key = snap.repo_key;
    escape.rel_path = "analysis.py";
    escape.dataset_paths = {"../outside.txt"};
    CHECK_THROWS_AS(build_workspace(snap, escape, dir.path() / "ws1"), WorkspaceError);

    CandidateFile absolute;
    absolute.repo_key = snap.repo_key;
    absolute.rel_path = "analysis.py";
    absolute.module_paths = {"/etc/passwd"};
    CHECK_THROWS_AS(build_workspace(snap, absolute, dir.path() / "ws2"), WorkspaceError);

    CandidateFile phantom;
    phantom.repo_key = snap.repo_key;
    phantom.rel_path = "analysis.py";
    phantom.dataset_paths = {"ghost.csv"};
    CHECK_THROWS_AS(build_workspace(snap, phantom, dir.path() / "ws3"), WorkspaceError);
}

TEST_CASE("randomized workspace closures stay exact", "[select][property]") {
    std::mt19937 rng(424242);
    for (int trial = 0; trial < 40; ++trial) {
        TempDir dir;
        auto src = dir.path() / "src";
        RepoRef repo;
        repo.owner = "rand";
        repo.name = "repo" + std::to_string(trial);

        // Random little tree: files under a few directories.
        std::vector<std::string> all_paths = {"main.py"};
        write_file(src / "main.py", "print('hi')\n");
        const std::vector<std::string> dirs = {"data", "data/sub", "lib", "assets"};
        std::uniform_int_distribution<int> n_files(0, 10);
        int files = n_files(rng);
        for (int i = 0; i < files; ++i) {
            std::string rel = dirs[rng() % dirs.size()] + "/f" + std::to_string(i) + ".dat";
            write_file(src / rel, std::string(1 + rng() % 400, 'x'));
            all_paths.push_back(rel);
        }
        auto snap = snapshot_repo(repo, dir.path() / "snap", src);

        // Declare a random subset (files and sometimes whole directories).
        CandidateFile c;
        c.repo_key = snap.repo_key;
        c.rel_path = "main.py";
        std::set<std::string> expected = {"main.py"};
        for (const auto& path : all_paths) {
            if (path == "main.py") continue;
            if (rng() % 3 == 0) {
                c.dataset_paths.push_back(path);
                expected.insert(path);
            }
        }
        if (files > 0 && rng() % 2 == 0 && snap.has_dir("data")) {
            c.module_paths.push_back("data");
            for (const auto& path : all_paths)
                if (starts_with(path, "data/")) expected.insert(path);
        }

        auto ws = build_workspace(snap, c, dir.path() / "ws");
        auto base = fs::path(ws.root) / "benchmark" / "datasets" / repo.name;
        std::set<std::string> walked;
        for (const auto& rel : list_files(base)) walked.insert(rel);
        REQUIRE(walked == expected);
        REQUIRE(std::set<std::string>(ws.copied_paths.begin(), ws.copied_paths.end()) == walked);
        REQUIRE(ws.byte_size <= snap.total_bytes);
        if (walked.size() < snap.file_tree.size()) REQUIRE(ws.byte_size < snap.total_bytes);
    }
}
