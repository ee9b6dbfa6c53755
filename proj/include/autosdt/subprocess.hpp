#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/strings.hpp>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

namespace autosdt {

struct RunSpec {
    std::vector<std::string> argv; // argv[0] resolved via PATH
    std::string cwd;               // empty: inherit
    // Exact environment ("KEY=VALUE" entries). nullopt inherits the parent's.
    std::optional<std::vector<std::string>> env;
    int timeout_s = 0;             // 0: unlimited
    std::size_t capture_bytes = 8192; // tail kept per stream
};

struct RunResult {
    int exit_code = -1;     // 128+signal when terminated by a signal
    bool timed_out = false;
    std::string stdout_tail;
    std::string stderr_tail;
    long long wall_ms = 0;

    bool ok() const { return !timed_out && exit_code == 0; }
};

namespace detail {

inline void keep_tail(std::string& buf, std::size_t max_bytes) {
    if (buf.size() > max_bytes) buf.erase(0, buf.size() - max_bytes);
}

} // namespace detail

// Runs a child in its own process group, captures stream tails, and kills the
// whole group on timeout. Never throws for child failures — those are encoded
// in the result; throws only when the process cannot be spawned at all.
inline RunResult run_process(const RunSpec& spec) {
    if (spec.argv.empty()) throw Error("empty argv");

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) throw Error("pipe() failed");

    std::vector<char*> argv;
    for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    std::vector<char*> envp;
    if (spec.env) {
        for (const auto& kv : *spec.env) envp.push_back(const_cast<char*>(kv.c_str()));
        envp.push_back(nullptr);
    }

    auto started = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid < 0) throw Error("fork() failed");

    if (pid == 0) {
        setpgid(0, 0);
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0) dup2(devnull, STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        if (!spec.cwd.empty() && chdir(spec.cwd.c_str()) != 0) _exit(127);
        if (spec.env) {
            execvpe(argv[0], argv.data(), envp.data());
        } else {
            execvp(argv[0], argv.data());
        }
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    RunResult result;
    std::string& out = result.stdout_tail;
    std::string& err = result.stderr_tail;

    auto deadline = started + std::chrono::seconds(spec.timeout_s > 0 ? spec.timeout_s : 0);
    bool open_out = true, open_err = true;
    char buf[4096];

    auto drain = [&](int fd, std::string& sink, bool& still_open) {
        for (;;) {
            ssize_t n = read(fd, buf, sizeof buf);
            if (n > 0) {
                sink.append(buf, static_cast<std::size_t>(n));
                detail::keep_tail(sink, spec.capture_bytes);
            } else if (n == 0) {
                still_open = false;
                return;
            } else {
                return; // EAGAIN or error; poll decides what happens next
            }
        }
    };

    while (open_out || open_err) {
        struct pollfd fds[2];
        nfds_t nfds = 0;
        if (open_out) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (open_err) fds[nfds++] = {err_pipe[0], POLLIN, 0};

        int wait_ms = 200;
        if (spec.timeout_s > 0) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
            if (left <= 0) {
                kill(-pid, SIGKILL);
                result.timed_out = true;
                break;
            }
            wait_ms = static_cast<int>(std::min<long long>(left, 200));
        }

        int rc = poll(fds, nfds, wait_ms);
        if (rc > 0) {
            for (nfds_t i = 0; i < nfds; ++i) {
                if (!(fds[i].revents & (POLLIN | POLLHUP))) continue;
                if (fds[i].fd == out_pipe[0]) drain(out_pipe[0], out, open_out);
                if (fds[i].fd == err_pipe[0]) drain(err_pipe[0], err, open_err);
                if (fds[i].revents & POLLHUP) {
                    if (fds[i].fd == out_pipe[0] && open_out) drain(out_pipe[0], out, open_out), open_out = false;
                    if (fds[i].fd == err_pipe[0] && open_err) drain(err_pipe[0], err, open_err), open_err = false;
                }
            }
        }
    }

    // Final drain once in blocking terms: pipes may still hold buffered bytes.
    drain(out_pipe[0], out, open_out);
    drain(err_pipe[0], err, open_err);
    close(out_pipe[0]);
    close(err_pipe[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    if (result.timed_out) {
        result.exit_code = 128 + SIGKILL;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    result.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    return result;
}

} // namespace autosdt
