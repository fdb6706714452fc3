#include "calibrex/external_process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>

namespace calibrex {

namespace {

constexpr std::size_t kStderrLimit = 8192;

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

// A child that exits before reading its stdin must not kill the parent.
void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

ProcessResult run_process_once(const std::string& command, const std::string& input, double timeout_s) {
    ignore_sigpipe_once();
    ProcessResult res;

    int in_pipe[2] = {-1, -1}, out_pipe[2] = {-1, -1}, err_pipe[2] = {-1, -1};
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
        res.spawn_failed = true;
        res.err = "pipe() failed";
        return res;
    }

    const pid_t pid = ::fork();
    if (pid < 0) {
        res.spawn_failed = true;
        res.err = "fork() failed";
        for (int* p : {in_pipe, out_pipe, err_pipe}) {
            close_fd(p[0]);
            close_fd(p[1]);
        }
        return res;
    }

    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        for (int* p : {in_pipe, out_pipe, err_pipe}) {
            ::close(p[0]);
            ::close(p[1]);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }

    close_fd(in_pipe[0]);
    close_fd(out_pipe[1]);
    close_fd(err_pipe[1]);

    // The request is one short line, far below PIPE_BUF; write then close so
    // the child sees EOF.
    std::size_t written = 0;
    while (written < input.size()) {
        const ssize_t w = ::write(in_pipe[1], input.data() + written, input.size() - written);
        if (w <= 0) break;  // EPIPE: child gone early; its exit status tells the story
        written += static_cast<std::size_t>(w);
    }
    close_fd(in_pipe[1]);

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout_s));

    int out_fd = out_pipe[0], err_fd = err_pipe[0];
    char buf[4096];
    bool dead = false;
    int status = 0;

    while (true) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            res.timed_out = true;
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            dead = true;
            break;
        }

        struct pollfd fds[2];
        nfds_t nfds = 0;
        if (out_fd >= 0) fds[nfds++] = {out_fd, POLLIN, 0};
        if (err_fd >= 0) fds[nfds++] = {err_fd, POLLIN, 0};

        if (nfds == 0) {
            // Streams closed; await exit, still honoring the deadline.
            const int r = ::waitpid(pid, &status, WNOHANG);
            if (r == pid) {
                dead = true;
                break;
            }
            ::usleep(2000);
            continue;
        }

        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        const int pr = ::poll(fds, nfds, static_cast<int>(std::min<long long>(remaining, 200)));
        if (pr < 0 && errno != EINTR) break;

        for (nfds_t i = 0; i < nfds; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const ssize_t r = ::read(fds[i].fd, buf, sizeof buf);
            if (r > 0) {
                if (fds[i].fd == out_fd) {
                    res.out.append(buf, static_cast<std::size_t>(r));
                } else if (res.err.size() < kStderrLimit) {
                    res.err.append(buf, std::min(static_cast<std::size_t>(r), kStderrLimit - res.err.size()));
                }
            } else if (r == 0 || (r < 0 && errno != EINTR && errno != EAGAIN)) {
                if (fds[i].fd == out_fd)
                    close_fd(out_fd);
                else
                    close_fd(err_fd);
            }
        }
    }

    close_fd(out_fd);
    close_fd(err_fd);
    if (!dead) ::waitpid(pid, &status, 0);

    if (res.timed_out) {
        res.exit_code = -1;
    } else if (WIFEXITED(status)) {
        res.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        res.exit_code = 128 + WTERMSIG(status);
    }
    return res;
}

}  // namespace calibrex
