#pragma once

// Exhaustive exploration of every interleaving of workflow actions on one
// two-character task. Each step is checked against an independent state
// oracle and the workflow invariants. Every maximal path ends in a state with
// no enabled action, and every such state must be final.

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "wist/annotation/workflow.hpp"

namespace wist::fixture {

struct ModelCheckResult {
  std::size_t steps = 0;            // successful transitions explored
  std::size_t rejected = 0;         // actions refused with a WorkflowError
  std::size_t states = 0;           // distinct reachable states
  std::size_t terminal_states = 0;   // states with no enabled action; all must be final
  std::size_t direct_final = 0;     // identical submissions, no adjudication
  std::size_t corrected_final = 0;  // adjudicated, corrections acknowledged
  std::size_t resolved_final = 0;   // settled by a senior
  std::string failure;              // empty when every check passed
  bool ok() const { return failure.empty(); }
};

struct ModelRoles {
  std::vector<std::string> annotators{"A", "B"};
  std::vector<std::string> experts{"E"};
  std::vector<std::string> seniors{"S"};
};

namespace model_detail {

using annotation::json;
using annotation::Task;
using annotation::TaskState;

inline json tree(std::vector<int> heads, std::vector<std::string> labels) {
  return {{"heads", std::move(heads)}, {"labels", std::move(labels)}};
}

// Two distinct legal trees and an alternative, plus an illegal one.
inline std::vector<json> legal_trees() {
  return {tree({2, 0}, {"att", "root"}), tree({0, 1}, {"root", "cmp"}), tree({0, 1}, {"root", "coo"})};
}
inline json illegal_tree() { return tree({0, 0}, {"root", "root"}); }

// What the state must be, derived from the task's data alone.
inline TaskState expected_state(const Task& t) {
  if (t.assignments.empty()) return TaskState::unassigned;
  if (t.assignments.size() == 1) return TaskState::partially_assigned;
  if (!t.assignments[0].submission || !t.assignments[1].submission) return TaskState::awaiting_second;
  if (!t.adjudication) {
    return t.assignments[0].submission->tree == t.assignments[1].submission->tree ? TaskState::final
                                                                                   : TaskState::inconsistent;
  }
  if (t.complaint) return t.complaint->senior.empty() ? TaskState::complained : TaskState::final;
  for (const auto& a : t.assignments) {
    if (a.needs_correction) return TaskState::awaiting_correction;
  }
  return TaskState::final;
}

inline std::string check_invariants(const Task& t, const ModelRoles& roles) {
  if (t.assignments.size() > 2) return "more than two slots";
  if (t.assignments.size() == 2 && t.assignments[0].annotator == t.assignments[1].annotator) {
    return "one annotator holds both slots";
  }
  for (const auto& a : t.assignments) {
    if (std::find(roles.annotators.begin(), roles.annotators.end(), a.annotator) == roles.annotators.end()) {
      return "slot held by non-annotator " + a.annotator;
    }
  }
  if (t.state != expected_state(t)) {
    return "state " + std::string(state_name(t.state)) + " but data says " + std::string(state_name(expected_state(t)));
  }
  if (t.state == TaskState::adjudicated) return "transient adjudicated state observed at rest";
  if (t.adjudication && t.annotated_by(t.adjudication->expert)) return "expert adjudicated own task";
  if (t.complaint && !t.complaint->senior.empty() &&
      (t.annotated_by(t.complaint->senior) || t.complaint->senior == t.adjudication->expert)) {
    return "senior already involved in the task";
  }
  if (t.state == TaskState::final) {
    if (!t.final_tree) return "final without an answer";
    if (!validate_tree(*t.final_tree).ok()) return "final answer is not a legal tree";
    const bool agreed = !t.adjudication && t.assignments[0].submission->tree == *t.final_tree;
    const bool adjudicated = t.adjudication && !t.complaint && t.adjudication->tree == *t.final_tree;
    const bool resolved = t.complaint && !t.complaint->senior.empty();
    if (!agreed && !adjudicated && !resolved) return "final answer has no provenance in the workflow";
  }
  return {};
}

struct Explorer {
  ModelRoles roles;
  std::string task_id;
  ModelCheckResult result;
  std::set<std::string> seen;

  using Action = std::function<void(annotation::Workflow&)>;

  std::vector<Action> actions() const {
    std::vector<Action> out;
    std::vector<std::string> everyone = roles.annotators;
    everyone.insert(everyone.end(), roles.experts.begin(), roles.experts.end());
    everyone.insert(everyone.end(), roles.seniors.begin(), roles.seniors.end());
    auto trees = legal_trees();
    trees.push_back(illegal_tree());
    const std::string id = task_id;
    // Every actor attempts every kind of action; the workflow decides.
    for (const auto& who : everyone) {
      out.push_back([who](annotation::Workflow& w) { w.next_task("p", who); });
      for (const auto& t : trees) {
        out.push_back([who, t, id](annotation::Workflow& w) { w.submit(id, who, t); });
        out.push_back([who, t, id](annotation::Workflow& w) { w.adjudicate(id, who, t); });
        out.push_back([who, t, id](annotation::Workflow& w) { w.resolve_complaint(id, who, t); });
      }
      out.push_back([who, id](annotation::Workflow& w) { w.complain(id, who, "disagree"); });
    }
    return out;
  }

  // Canonical state without event sequence numbers.
  static std::string key(const annotation::Workflow& w) {
    json s = w.state_json();
    s.erase("seq");
    for (auto& [id, t] : s["tasks"].items()) {
      for (auto& a : t["assignments"]) {
        if (a.contains("submission")) a["submission"].erase("seq");
      }
    }
    return s.dump();
  }

  // Returns false to abort the search.
  bool explore(const annotation::Workflow& w, const std::vector<Action>& acts, std::size_t depth) {
    if (depth > 64) {
      result.failure = "path longer than 64 steps";
      return false;
    }
    // Interleavings that reach the same state share one subtree.
    if (!seen.insert(key(w)).second) return true;
    ++result.states;
    bool moved = false;
    for (const auto& act : acts) {
      annotation::Workflow next = w;
      try {
        act(next);
      } catch (const annotation::WorkflowError&) {
        ++result.rejected;
        if (next.last_seq() != w.last_seq()) {
          result.failure = "rejected action changed the state";
          return false;
        }
        continue;
      }
      const Task& before_task = w.task(task_id);
      if (before_task.state == TaskState::final) {
        result.failure = "final task accepted another action";
        return false;
      }
      moved = true;
      ++result.steps;
      const Task& t = next.task(task_id);
      if (auto f = check_invariants(t, roles); !f.empty()) {
        result.failure = f;
        return false;
      }
      if (!explore(next, acts, depth + 1)) return false;
    }
    if (!moved) {
      const Task& t = w.task(task_id);
      ++result.terminal_states;
      if (t.state != TaskState::final) {
        result.failure = "dead end in state " + std::string(state_name(t.state));
        return false;
      }
      if (!t.adjudication) {
        ++result.direct_final;
      } else if (t.complaint) {
        ++result.resolved_final;
      } else {
        ++result.corrected_final;
      }
    }
    return true;
  }
};

}  // namespace model_detail

inline ModelCheckResult check_workflow_model(const ModelRoles& roles = {}) {
  annotation::Workflow w;
  w.create_project("p", 7, roles.annotators, roles.experts, roles.seniors);
  auto ids = w.import_tasks("p", {{"上下", {}, {}}});
  model_detail::Explorer ex{roles, ids.front(), {}, {}};
  const auto acts = ex.actions();
  ex.explore(w, acts, 0);
  if (ex.result.ok() && (ex.result.direct_final == 0 || ex.result.corrected_final == 0 || ex.result.resolved_final == 0)) {
    ex.result.failure = "some route to final was never exercised";
  }
  return ex.result;
}

}  // namespace wist::fixture
