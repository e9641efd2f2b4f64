#pragma once

#include <cstddef>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <sys/types.h>
#include <vector>

#include "lfhcp/io.hpp"
#include "lfhcp/sim.hpp"

namespace lfhcp {

/// {"scans": [[...]...], "past_actions": [[v,w]...], "goal": [gx,gy], "m_a": n}
json planner_request(const PlannerInput& input, std::size_t m_a);
PlannerInput planner_input_from_request(const json& request, std::size_t& m_a);
/// Accepts {"actions": [[v,w]...]} or a bare [[v,w]...] array.
std::vector<Action> parse_planner_response(const json& response);

/// Speaks the line protocol with a child process started through /bin/sh.
class StdioPlanner : public Planner {
 public:
  explicit StdioPlanner(std::string command, double timeout_s = 5.0);
  ~StdioPlanner() override;
  StdioPlanner(const StdioPlanner&) = delete;
  StdioPlanner& operator=(const StdioPlanner&) = delete;

  std::string name() const override { return "stdio"; }
  std::vector<Action> plan(const PlannerInput& input, std::size_t m_a) override;

 private:
  std::string read_line();

  std::string command_;
  double timeout_s_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// Answers protocol requests from `in` with `planner` until end of input.
/// Returns the number of requests served.
std::size_t serve_planner(Planner& planner, std::istream& in, std::ostream& out);

}  // namespace lfhcp
