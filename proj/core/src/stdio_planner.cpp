#include "lfhcp/stdio_planner.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace lfhcp {

json planner_request(const PlannerInput& input, std::size_t m_a) {
  return json{{"scans", input.scans},
              {"past_actions", input.past_actions},
              {"goal", vec_to_json(input.goal)},
              {"m_a", m_a}};
}

PlannerInput planner_input_from_request(const json& request, std::size_t& m_a) {
  if (!request.is_object()) throw InvalidInput("request must be an object");
  PlannerInput input;
  request.at("scans").get_to(input.scans);
  request.at("past_actions").get_to(input.past_actions);
  input.goal = vec_from_json(request.at("goal"));
  m_a = request.value("m_a", std::size_t{5});
  return input;
}

std::vector<Action> parse_planner_response(const json& response) {
  const json& actions = response.is_object() ? response.at("actions") : response;
  if (!actions.is_array()) throw InvalidInput("response must hold an action array");
  return actions.get<std::vector<Action>>();
}

StdioPlanner::StdioPlanner(std::string command, double timeout_s)
    : command_(std::move(command)), timeout_s_(timeout_s) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw std::runtime_error("pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw std::runtime_error("pipe failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

StdioPlanner::~StdioPlanner() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    // Give the child a moment to exit on EOF, then make sure it is gone.
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) return;
      usleep(10000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
}

std::string StdioPlanner::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s_);
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw std::runtime_error("external planner timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) throw std::runtime_error("external planner timed out");
    char chunk[65536];
    const ssize_t got = read(from_child_, chunk, sizeof chunk);
    if (got <= 0) throw std::runtime_error("external planner closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

std::vector<Action> StdioPlanner::plan(const PlannerInput& input, std::size_t m_a) {
  std::string line = planner_request(input, m_a).dump();
  line += '\n';
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t n = write(to_child_, line.data() + off, line.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw std::runtime_error("external planner closed its input");
    off += static_cast<std::size_t>(n);
  }
  return parse_planner_response(json::parse(read_line()));
}

std::size_t serve_planner(Planner& planner, std::istream& in, std::ostream& out) {
  std::string line;
  std::size_t served = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t m_a = 5;
    const auto input = planner_input_from_request(json::parse(line), m_a);
    out << json{{"actions", planner.plan(input, m_a)}}.dump() << '\n' << std::flush;
    ++served;
  }
  return served;
}

}  // namespace lfhcp
