#include <autosdt/subprocess.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "support/temp_dir.hpp"

using namespace autosdt;

TEST_CASE("processes run, capture output, and report exit codes", "[subprocess]") {
    RunSpec spec;
    spec.argv = {"/bin/sh", "-c", "echo out-line; echo err-line >&2; exit 3"};
    RunResult r = run_process(spec);
    CHECK(r.exit_code == 3);
    CHECK_FALSE(r.timed_out);
    CHECK(r.stdout_tail == "out-line\n");
    CHECK(r.stderr_tail == "err-line\n");
    CHECK_FALSE(r.ok());
}

TEST_CASE("working directory is applied", "[subprocess]") {
    testutil::TempDir tmp;
    RunSpec spec;
    spec.argv = {"/bin/sh", "-c", "pwd"};
    spec.cwd = tmp.path().string();
    RunResult r = run_process(spec);
    CHECK(r.ok());
    CHECK(trim(r.stdout_tail) == tmp.path().string());
}

TEST_CASE("an exact environment replaces the parent's", "[subprocess]") {
    RunSpec spec;
    spec.argv = {"/bin/sh", "-c", "echo \"HOME=$HOME MARKER=$MARKER PATH=$PATH\""};
    spec.env = std::vector<std::string>{"PATH=/usr/bin:/bin", "MARKER=present"};
    RunResult r = run_process(spec);
    CHECK(r.ok());
    CHECK(contains(r.stdout_tail, "HOME= "));       // scrubbed
    CHECK(contains(r.stdout_tail, "MARKER=present"));
    CHECK(contains(r.stdout_tail, "PATH=/usr/bin:/bin"));
}

TEST_CASE("timeouts kill the whole process group", "[subprocess][slow]") {
    RunSpec spec;
    spec.argv = {"/bin/sh", "-c", "sleep 30; echo never"};
    spec.timeout_s = 1;
    auto start = std::chrono::steady_clock::now();
    RunResult r = run_process(spec);
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(r.timed_out);
    CHECK(r.exit_code == 128 + SIGKILL);
    CHECK_FALSE(contains(r.stdout_tail, "never"));
    CHECK(elapsed < 5.0);
}

TEST_CASE("stream tails keep the last bytes of long output", "[subprocess]") {
    RunSpec spec;
    spec.argv = {"/bin/sh", "-c", "i=0; while [ $i -lt 2000 ]; do echo line-$i; i=$((i+1)); done"};
    spec.capture_bytes = 512;
    RunResult r = run_process(spec);
    CHECK(r.ok());
    CHECK(r.stdout_tail.size() <= 512);
    CHECK(contains(r.stdout_tail, "line-1999")); // the tail survives
    CHECK_FALSE(contains(r.stdout_tail, "line-0\n"));
}

TEST_CASE("a missing executable is encoded, not thrown", "[subprocess]") {
    RunSpec spec;
    spec.argv = {"/definitely/not/a/binary"};
    RunResult r = run_process(spec);
    CHECK(r.exit_code == 127);
}
