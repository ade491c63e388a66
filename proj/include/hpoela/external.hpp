#pragma once

// Client for external evaluators that speak line-delimited JSON over the
// child's standard streams:
//   {"op":"info"}          -> {"dim":d,"lower":[...],"upper":[...],"name":"..."}
//   {"op":"eval","x":[..]} -> {"y":value}
//   {"op":"quit"}

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"

namespace hpoela::external {

using json = nlohmann::json;

struct EvaluatorInfo {
  std::size_t dim = 0;
  BoxDomain domain;
  std::string name;
};

/// One child process; requests are serialized (one in flight).
class Evaluator {
 public:
  explicit Evaluator(std::vector<std::string> argv, std::chrono::milliseconds timeout = std::chrono::seconds(60))
      : argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw Error(ErrorKind::InvalidInput, "evaluator command is empty");
    spawn();
    handshake();
  }

  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  ~Evaluator() { shutdown(); }

  const EvaluatorInfo& info() const { return info_; }
  pid_t pid() const { return pid_; }

  double evaluate(std::span<const double> z) { return evaluate(z, timeout_); }

  double evaluate(std::span<const double> z, std::chrono::milliseconds timeout) {
    std::lock_guard lock(mutex_);
    if (z.size() != info_.dim) throw Error(ErrorKind::InvalidDimension, "point length does not match evaluator dim");
    json req = {{"op", "eval"}, {"x", std::vector<double>(z.begin(), z.end())}};
    const json resp = request(req, timeout);
    if (resp.contains("error")) throw Error(ErrorKind::Evaluation, "evaluator reported: " + resp["error"].dump());
    if (!resp.contains("y") || !resp["y"].is_number()) throw Error(ErrorKind::Protocol, "response lacks numeric y");
    return resp["y"].get<double>();
  }

  void shutdown() {
    if (pid_ <= 0) return;
    if (fd_ >= 0 && !broken_) {
      const std::string quit = "{\"op\":\"quit\"}\n";
      (void)::send(fd_, quit.data(), quit.size(), MSG_NOSIGNAL);
    }
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    // give the child a moment to exit on its own
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }

 private:
  void spawn() {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      throw Error(ErrorKind::BrokenChannel, std::string("socketpair: ") + std::strerror(errno));
    }
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw Error(ErrorKind::BrokenChannel, "fork failed");
    }
    if (pid_ == 0) {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(sv[1]);
    fd_ = sv[0];
  }

  void handshake() {
    const json resp = request(json{{"op", "info"}}, timeout_);
    try {
      info_.dim = resp.at("dim").get<std::size_t>();
      info_.domain = BoxDomain(resp.at("lower").get<std::vector<double>>(), resp.at("upper").get<std::vector<double>>());
      info_.name = resp.at("name").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Protocol, std::string("bad info response: ") + e.what());
    }
    if (info_.domain.dim() != info_.dim) throw Error(ErrorKind::Protocol, "info bounds disagree with dim");
  }

  json request(const json& req, std::chrono::milliseconds timeout) {
    if (broken_ || fd_ < 0) throw Error(ErrorKind::BrokenChannel, "evaluator channel is closed");
    const std::string line = req.dump() + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
      const ssize_t w = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (w < 0) {
        if (errno == EINTR) continue;
        broken_ = true;
        throw Error(ErrorKind::BrokenChannel, std::string("write failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(w);
    }
    const std::string resp = read_line(timeout);
    try {
      json parsed = json::parse(resp);
      if (!parsed.is_object()) throw Error(ErrorKind::Protocol, "response is not a JSON object");
      return parsed;
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Protocol, std::string("malformed response: ") + e.what());
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        // a late reply would desynchronize the stream
        broken_ = true;
        throw Error(ErrorKind::Timeout, "no response within " + std::to_string(timeout.count()) + " ms");
      }
      pollfd pfd{fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        broken_ = true;
        throw Error(ErrorKind::BrokenChannel, "poll failed");
      }
      if (rc == 0) continue;
      char chunk[4096];
      const ssize_t r = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) {
        broken_ = true;
        throw Error(ErrorKind::BrokenChannel, "evaluator closed the channel");
      }
      buffer_.append(chunk, static_cast<std::size_t>(r));
    }
  }

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int fd_ = -1;
  bool broken_ = false;
  std::string buffer_;
  EvaluatorInfo info_;
  std::mutex mutex_;
};

inline Problem make_problem(std::shared_ptr<Evaluator> evaluator, ProblemClass cls = ProblemClass::Hpo) {
  Problem p;
  p.id = evaluator->info().name;
  p.cls = cls;
  p.domain = evaluator->info().domain;
  p.evaluate = [evaluator](std::span<const double> z) { return evaluator->evaluate(z); };
  return p;
}

}  // namespace hpoela::external
