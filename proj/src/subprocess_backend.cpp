// SPDX-License-Identifier: Apache-2.0
// Detector reached over a child process's stdin/stdout, one JSON message per
// line. Each child serves one request at a time; the pool grows up to
// pool_size children and respawns any child that dies or stops answering.

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <thread>
#include <vector>

#include "affc/detector.hpp"
#include "affc/errors.hpp"
#include "affc/protocol.hpp"

extern char** environ;

namespace affc {

namespace {

using Clock = std::chrono::steady_clock;

struct Timeout {};

class Worker {
 public:
  Worker(pid_t pid, int fd) : pid_(pid), fd_(fd) {}
  ~Worker() { terminate(); }
  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  void send_line(const std::string& line) {
    std::string out = line + "\n";
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t n = ::send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("detector process unreachable: ") +
                             std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(Clock::time_point deadline) {
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) throw Timeout{};
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) throw Timeout{};
      char chunk[65536];
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("read from detector failed: ") + std::strerror(errno));
      }
      if (n == 0) throw TransportError("detector process exited");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  void terminate() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    if (pid_ <= 0) return;
    // Closing the socket gives the child EOF on stdin; give it a moment.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(4));
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  pid_t pid_;
  int fd_;
  std::string buffer_;
};

class SubprocessBackend final : public DetectorBackend {
 public:
  SubprocessBackend(std::string command, std::size_t pool_size,
                    std::chrono::milliseconds timeout)
      : command_(std::move(command)), pool_size_(pool_size), timeout_(timeout) {}

  DetectorMetadata handshake() override {
    auto worker = acquire();
    release(std::move(worker), true);
    std::lock_guard lock(mutex_);
    return meta_;
  }

  DetectionSet detect(const Probe& probe) override {
    const std::string id = std::to_string(next_id_.fetch_add(1));
    const auto request = protocol::detect_request(id, probe).dump();
    auto worker = acquire();
    try {
      worker->send_line(request);
      const auto msg = protocol::parse_line(worker->read_line(Clock::now() + timeout_));
      auto out = protocol::parse_detect_response(msg, id, probe.strength);
      release(std::move(worker), true);
      return out;
    } catch (const Timeout&) {
      release(std::move(worker), false);
      throw ProbeError("detector timed out after " + std::to_string(timeout_.count()) + " ms",
                       probe.strength);
    } catch (const ProbeError&) {
      // An error reply leaves the child in sync.
      release(std::move(worker), true);
      throw;
    } catch (...) {
      release(std::move(worker), false);
      throw;
    }
  }

 private:
  std::unique_ptr<Worker> acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !idle_.empty() || live_ < pool_size_; });
    if (!idle_.empty()) {
      auto w = std::move(idle_.back());
      idle_.pop_back();
      return w;
    }
    ++live_;
    lock.unlock();
    try {
      return spawn();
    } catch (...) {
      lock.lock();
      --live_;
      cv_.notify_one();
      throw;
    }
  }

  void release(std::unique_ptr<Worker> worker, bool healthy) {
    {
      std::lock_guard lock(mutex_);
      if (healthy) {
        idle_.push_back(std::move(worker));
      } else {
        --live_;
      }
    }
    cv_.notify_one();
    // An unhealthy worker is reaped here, outside the lock.
  }

  std::unique_ptr<Worker> spawn() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
      throw TransportError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);

    // Own process group, so a kill also reaches whatever the shell forked.
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
    pid_t pid = 0;
    const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, &attr,
                                 const_cast<char* const*>(argv), environ);
    posix_spawnattr_destroy(&attr);
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    if (rc != 0) {
      ::close(fds[0]);
      throw TransportError("cannot start detector `" + command_ + "`: " + std::strerror(rc));
    }

    auto worker = std::make_unique<Worker>(pid, fds[0]);
    DetectorMetadata meta;
    try {
      worker->send_line(protocol::hello_request().dump());
      meta = protocol::parse_hello_ack(
          protocol::parse_line(worker->read_line(Clock::now() + timeout_)));
    } catch (const Timeout&) {
      throw StartupError("detector `" + command_ + "` did not answer hello");
    }
    std::lock_guard lock(mutex_);
    meta_ = meta;
    return worker;
  }

  std::string command_;
  std::size_t pool_size_;
  std::chrono::milliseconds timeout_;
  std::atomic<std::uint64_t> next_id_{1};

  std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Worker>> idle_;
  std::size_t live_ = 0;
  DetectorMetadata meta_;
};

}  // namespace

std::unique_ptr<DetectorBackend> make_subprocess_backend(
    std::string command, std::size_t pool_size, std::chrono::milliseconds timeout) {
  return std::make_unique<SubprocessBackend>(std::move(command), pool_size, timeout);
}

}  // namespace affc
