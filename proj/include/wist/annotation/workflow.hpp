#pragma once

// Double-annotation workflow: random assignment to two annotators, direct
// acceptance of identical submissions, blind expert adjudication, correction
// notices, complaints and senior resolution.
//
// Every mutation is an event. Commands validate and build the event; apply()
// is the only code that changes state, so replaying the event log rebuilds the
// exact same state.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "wist/analysis.hpp"
#include "wist/random.hpp"
#include "wist/treebank.hpp"

namespace wist::annotation {

using nlohmann::json;

enum class TaskState {
  unassigned,
  partially_assigned,
  awaiting_second,
  inconsistent,
  adjudicated,
  awaiting_correction,
  complained,
  final
};

inline std::string_view state_name(TaskState s) {
  switch (s) {
    case TaskState::unassigned: return "unassigned";
    case TaskState::partially_assigned: return "partially_assigned";
    case TaskState::awaiting_second: return "awaiting_second";
    case TaskState::inconsistent: return "inconsistent";
    case TaskState::adjudicated: return "adjudicated";
    case TaskState::awaiting_correction: return "awaiting_correction";
    case TaskState::complained: return "complained";
    case TaskState::final: return "final";
  }
  return "?";
}

inline TaskState parse_state(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(TaskState::final); ++i) {
    if (state_name(static_cast<TaskState>(i)) == s) return static_cast<TaskState>(i);
  }
  throw DataError("unknown task state '" + std::string(s) + "'");
}

// HTTP-flavoured failure classes.
enum class ErrorKind { bad_request = 400, not_found = 404, conflict = 409, illegal_tree = 422 };

class WorkflowError : public std::runtime_error {
 public:
  WorkflowError(ErrorKind k, const std::string& msg, std::vector<std::string> violations = {})
      : std::runtime_error(msg), kind(k), violations(std::move(violations)) {}
  ErrorKind kind;
  std::vector<std::string> violations;
  int status() const { return static_cast<int>(kind); }
};

struct Submission {
  std::string annotator;
  DepTree tree;
  bool multi_structure = false;
  std::uint64_t seq = 0;  // event sequence number, doubles as timestamp
};

struct Assignment {
  std::string annotator;
  std::optional<Submission> submission;
  bool needs_correction = false;
  std::optional<Submission> correction;
};

struct Adjudication {
  std::string expert;
  DepTree tree;
};

struct Complaint {
  std::string annotator;
  std::string reason;
  std::string senior;  // set on resolution
};

struct Task {
  std::string id;
  std::string project;
  std::string surface;
  std::vector<std::string> pos_hints;
  std::vector<std::string> examples;
  TaskState state = TaskState::unassigned;
  std::vector<Assignment> assignments;
  std::optional<Adjudication> adjudication;
  std::optional<Complaint> complaint;
  std::optional<DepTree> final_tree;

  std::size_t length() const { return utf8::length(surface); }
  bool annotated_by(const std::string& who) const {
    return std::any_of(assignments.begin(), assignments.end(), [&](const auto& a) { return a.annotator == who; });
  }
  Assignment* slot_of(const std::string& who) {
    for (auto& a : assignments) {
      if (a.annotator == who) return &a;
    }
    return nullptr;
  }
  const Assignment* slot_of(const std::string& who) const { return const_cast<Task*>(this)->slot_of(who); }
};

struct Project {
  std::string name;
  std::uint64_t seed = 1;
  std::set<std::string> annotators, experts, seniors;
  std::vector<std::string> task_ids;  // import order
  std::uint64_t assignments = 0;      // drives the per-call assignment seed
};

struct TaskImport {
  std::string surface;
  std::vector<std::string> pos_hints;
  std::vector<std::string> examples;
};

// Two-slot submission record of final tasks, ready for the analysis module.
struct Export {
  Treebank final;
  analysis::AnnotationSet slot1{"slot1", {}}, slot2{"slot2", {}};
  std::string final_text() const { return serialize_treebank(final); }
};

namespace detail {

inline json tree_json(const DepTree& t) {
  json labels = json::array();
  for (Label l : t.labels) labels.push_back(std::string(label_name(l)));
  return {{"heads", t.heads}, {"labels", labels}};
}

// Reads heads/labels from a request or event body; shape problems are 400s,
// tree-shape violations 422s.
inline DepTree tree_from_json(const json& body, std::size_t expected_len) {
  if (!body.contains("heads") || !body.contains("labels") || !body["heads"].is_array() ||
      !body["labels"].is_array()) {
    throw WorkflowError(ErrorKind::bad_request, "tree needs 'heads' and 'labels' arrays");
  }
  DepTree t;
  for (const auto& h : body["heads"]) {
    if (!h.is_number_integer()) throw WorkflowError(ErrorKind::bad_request, "heads must be integers");
    t.heads.push_back(h.get<int>());
  }
  for (const auto& l : body["labels"]) {
    if (!l.is_string()) throw WorkflowError(ErrorKind::bad_request, "labels must be strings");
    auto parsed = try_parse_label(l.get<std::string>());
    if (!parsed) throw WorkflowError(ErrorKind::bad_request, "unknown label '" + l.get<std::string>() + "'");
    t.labels.push_back(*parsed);
  }
  if (t.heads.size() != expected_len || t.labels.size() != expected_len) {
    throw WorkflowError(ErrorKind::bad_request, "tree has " + std::to_string(t.heads.size()) + " heads and " +
                                                    std::to_string(t.labels.size()) + " labels for a word of " +
                                                    std::to_string(expected_len) + " characters");
  }
  auto report = validate_tree(t);
  if (!report.ok()) {
    std::vector<std::string> v;
    for (const auto& x : report.violations) v.push_back(std::string(violation_name(x.kind)) + ": " + x.message);
    throw WorkflowError(ErrorKind::illegal_tree, "illegal tree: " + report.summary(), std::move(v));
  }
  return t;
}

inline DepTree tree_from_event(const json& ev) {
  DepTree t;
  t.heads = ev.at("heads").get<std::vector<int>>();
  for (const auto& l : ev.at("labels")) t.labels.push_back(parse_label(l.get<std::string>()));
  return t;
}

inline bool same_tree(const DepTree& a, const DepTree& b) { return a.heads == b.heads && a.labels == b.labels; }

}  // namespace detail

class Workflow {
 public:
  // Called with every committed event before it is applied (persistence hook).
  std::function<void(const json&)> on_event;

  // ---- commands ----

  void create_project(const std::string& name, std::uint64_t seed, const std::vector<std::string>& annotators,
                      const std::vector<std::string>& experts, const std::vector<std::string>& seniors) {
    if (name.empty() || name.find('/') != std::string::npos) {
      throw WorkflowError(ErrorKind::bad_request, "project name must be non-empty and contain no '/'");
    }
    if (projects_.count(name)) throw WorkflowError(ErrorKind::conflict, "project '" + name + "' exists");
    commit({{"type", "project"},
            {"name", name},
            {"seed", seed},
            {"annotators", annotators},
            {"experts", experts},
            {"seniors", seniors}});
  }

  // All-or-nothing; returns the new task ids.
  std::vector<std::string> import_tasks(const std::string& project, const std::vector<TaskImport>& items) {
    Project& p = project_ref(project);
    std::set<std::string> seen;
    for (const auto& id : p.task_ids) seen.insert(tasks_.at(id).surface);
    json list = json::array();
    std::vector<std::string> ids;
    std::uint64_t next = next_task_;
    for (const auto& it : items) {
      std::size_t len = 0;
      try {
        len = utf8::length(it.surface);
      } catch (const DataError& e) {
        throw WorkflowError(ErrorKind::bad_request, e.what());
      }
      if (len < 2) throw WorkflowError(ErrorKind::bad_request, "'" + it.surface + "' has fewer than 2 characters");
      if (!seen.insert(it.surface).second) {
        throw WorkflowError(ErrorKind::conflict, "duplicate surface '" + it.surface + "'");
      }
      const std::string id = "t" + std::to_string(++next);
      ids.push_back(id);
      list.push_back({{"id", id}, {"surface", it.surface}, {"pos", it.pos_hints}, {"examples", it.examples}});
    }
    commit({{"type", "import"}, {"project", project}, {"tasks", list}});
    return ids;
  }

  // Uniform choice among tasks with a free slot that `annotator` has not seen.
  const Task& next_task(const std::string& project, const std::string& annotator) {
    Project& p = project_ref(project);
    if (!p.annotators.count(annotator)) {
      throw WorkflowError(ErrorKind::not_found, "unknown annotator '" + annotator + "' in project '" + project + "'");
    }
    std::vector<const Task*> eligible;
    for (const auto& id : p.task_ids) {
      const Task& t = tasks_.at(id);
      if (t.assignments.size() < 2 && !t.annotated_by(annotator)) eligible.push_back(&t);
    }
    if (eligible.empty()) throw WorkflowError(ErrorKind::not_found, "no eligible task for '" + annotator + "'");
    Rng rng(p.seed * 0x9E3779B97F4A7C15ull + p.assignments);
    const Task* pick = eligible[rng.below(eligible.size())];
    const std::string id = pick->id;
    commit({{"type", "assign"}, {"task", id}, {"annotator", annotator}});
    return tasks_.at(id);
  }

  // First submission from a slot holder, or the corrected resubmission after
  // adjudication (which must equal the adjudicated tree).
  TaskState submit(const std::string& task_id, const std::string& annotator, const json& body) {
    Task& t = task_ref(task_id);
    if (t.state == TaskState::final) throw WorkflowError(ErrorKind::conflict, "task " + task_id + " is final");
    Assignment* slot = t.slot_of(annotator);
    if (!slot) throw WorkflowError(ErrorKind::conflict, "'" + annotator + "' holds no slot on task " + task_id);
    DepTree tree = detail::tree_from_json(body, t.length());
    const bool multi = body.value("multi_structure", false);
    if (t.state == TaskState::awaiting_correction && slot->needs_correction) {
      if (!detail::same_tree(tree, t.adjudication->tree)) {
        throw WorkflowError(ErrorKind::conflict,
                            "correction must equal the adjudicated answer; file a complaint to dispute it");
      }
      commit({{"type", "correct"}, {"task", task_id}, {"annotator", annotator}, {"heads", tree.heads},
              {"labels", detail::tree_json(tree)["labels"]}});
      return t.state;
    }
    if (slot->submission) throw WorkflowError(ErrorKind::conflict, "'" + annotator + "' already submitted task " + task_id);
    commit({{"type", "submit"}, {"task", task_id}, {"annotator", annotator}, {"heads", tree.heads},
            {"labels", detail::tree_json(tree)["labels"]}, {"multi_structure", multi}});
    return t.state;
  }

  TaskState adjudicate(const std::string& task_id, const std::string& expert, const json& body) {
    Task& t = task_ref(task_id);
    const Project& p = projects_.at(t.project);
    if (!p.experts.count(expert)) throw WorkflowError(ErrorKind::not_found, "unknown expert '" + expert + "'");
    if (t.state != TaskState::inconsistent) {
      throw WorkflowError(ErrorKind::conflict, "task " + task_id + " is " + std::string(state_name(t.state)) +
                                                   ", adjudication needs inconsistent");
    }
    if (t.annotated_by(expert)) {
      throw WorkflowError(ErrorKind::conflict, "'" + expert + "' annotated task " + task_id + " and cannot adjudicate it");
    }
    DepTree tree = detail::tree_from_json(body, t.length());
    commit({{"type", "adjudicate"}, {"task", task_id}, {"expert", expert}, {"heads", tree.heads},
            {"labels", detail::tree_json(tree)["labels"]}});
    return t.state;
  }

  TaskState complain(const std::string& task_id, const std::string& annotator, const std::string& reason) {
    Task& t = task_ref(task_id);
    Assignment* slot = t.slot_of(annotator);
    if (t.state != TaskState::awaiting_correction || !slot || !slot->needs_correction) {
      throw WorkflowError(ErrorKind::conflict, "'" + annotator + "' has no pending correction on task " + task_id);
    }
    commit({{"type", "complain"}, {"task", task_id}, {"annotator", annotator}, {"reason", reason}});
    return t.state;
  }

  TaskState resolve_complaint(const std::string& task_id, const std::string& senior, const json& body) {
    Task& t = task_ref(task_id);
    const Project& p = projects_.at(t.project);
    if (!p.seniors.count(senior)) throw WorkflowError(ErrorKind::not_found, "unknown senior expert '" + senior + "'");
    if (t.state != TaskState::complained) {
      throw WorkflowError(ErrorKind::conflict, "task " + task_id + " has no open complaint");
    }
    if (t.annotated_by(senior) || t.adjudication->expert == senior) {
      throw WorkflowError(ErrorKind::conflict, "'" + senior + "' already took part in task " + task_id);
    }
    DepTree tree = detail::tree_from_json(body, t.length());
    commit({{"type", "resolve"}, {"task", task_id}, {"senior", senior}, {"heads", tree.heads},
            {"labels", detail::tree_json(tree)["labels"]}});
    return t.state;
  }

  // Final answers in import order plus the first submission of each slot.
  Export export_final(const std::string& project) const {
    const Project& p = project_ref(project);
    Export out;
    for (const auto& id : p.task_ids) {
      const Task& t = tasks_.at(id);
      if (t.state != TaskState::final) continue;
      WordEntry e;
      e.chars = utf8::split_chars(t.surface);
      e.tree = *t.final_tree;
      e.pos_tags = t.pos_hints;
      out.final.words.push_back(e);
      if (t.assignments.size() == 2 && t.assignments[0].submission && t.assignments[1].submission) {
        for (int s = 0; s < 2; ++s) {
          WordEntry sub = e;
          sub.tree = t.assignments[static_cast<std::size_t>(s)].submission->tree;
          sub.meta = {{"annotator", t.assignments[static_cast<std::size_t>(s)].annotator}};
          (s == 0 ? out.slot1 : out.slot2).tb.words.push_back(std::move(sub));
        }
      }
    }
    return out;
  }

  json stats(const std::string& project) const {
    const Project& p = project_ref(project);
    json states = json::object();
    for (int i = 0; i <= static_cast<int>(TaskState::final); ++i) states[std::string(state_name(static_cast<TaskState>(i)))] = 0;
    std::size_t submissions = 0;
    std::map<std::string, std::size_t> per_annotator;
    for (const auto& id : p.task_ids) {
      const Task& t = tasks_.at(id);
      states[std::string(state_name(t.state))] = states[std::string(state_name(t.state))].get<int>() + 1;
      for (const auto& a : t.assignments) {
        if (a.submission) {
          ++submissions;
          ++per_annotator[a.annotator];
        }
      }
    }
    json out = {{"project", project}, {"tasks", p.task_ids.size()}, {"states", states}, {"submissions", submissions}};
    json ann = json::object();
    for (const auto& [who, n] : per_annotator) ann[who] = {{"submissions", n}};
    auto ex = export_final(project);
    if (!ex.slot1.tb.words.empty()) {
      auto c = analysis::pairwise_consistency(ex.slot1, ex.slot2);
      out["consistency"] = {{"dep_labeled", c.dep_labeled}, {"dep_unlabeled", c.dep_unlabeled},
                            {"word_labeled", c.word_labeled}, {"word_unlabeled", c.word_unlabeled},
                            {"words", c.n_words}};
      auto acc = analysis::annotation_accuracy({ex.slot1, ex.slot2}, ex.final);
      out["accuracy"] = {{"dep_labeled", acc.overall_labeled}, {"dep_unlabeled", acc.overall_unlabeled},
                         {"word_labeled", acc.word_labeled}, {"word_unlabeled", acc.word_unlabeled}};
      // Per-annotator quality against final answers.
      std::map<std::string, analysis::AnnotationSet> mine;
      for (const auto* set : {&ex.slot1, &ex.slot2}) {
        for (const auto& w : set->tb.words) {
          const std::string who = w.meta.front().second;
          mine[who].annotator = who;
          mine[who].tb.words.push_back(w);
        }
      }
      for (const auto& [who, set] : mine) {
        auto a = analysis::annotation_accuracy({set}, ex.final);
        ann[who]["accuracy_dep_labeled"] = a.overall_labeled;
        ann[who]["accuracy_word_labeled"] = a.word_labeled;
      }
    }
    out["annotators"] = ann;
    return out;
  }

  // ---- views ----

  const Task& task(const std::string& id) const {
    auto it = tasks_.find(id);
    if (it == tasks_.end()) throw WorkflowError(ErrorKind::not_found, "unknown task '" + id + "'");
    return it->second;
  }

  // Task document. Viewers who did not annotate the task see submissions
  // without annotator ids (blind adjudication).
  json task_view(const std::string& id, const std::string& viewer = "") const {
    const Task& t = task(id);
    const bool insider = !viewer.empty() && t.annotated_by(viewer);
    json subs = json::array();
    for (std::size_t i = 0; i < t.assignments.size(); ++i) {
      const auto& a = t.assignments[i];
      json s = {{"slot", i + 1}, {"submitted", a.submission.has_value()}, {"needs_correction", a.needs_correction}};
      if (insider) s["annotator"] = a.annotator;
      if (a.submission && (insider ? a.annotator == viewer : true)) s["tree"] = detail::tree_json(a.submission->tree);
      subs.push_back(s);
    }
    json out = {{"id", t.id},          {"project", t.project},  {"surface", t.surface},
                {"chars", utf8::split_chars(t.surface)}, {"pos_hints", t.pos_hints}, {"examples", t.examples},
                {"state", state_name(t.state)}, {"assignments", subs}};
    if (t.adjudication) out["adjudicated_tree"] = detail::tree_json(t.adjudication->tree);
    if (t.final_tree) out["final_tree"] = detail::tree_json(*t.final_tree);
    if (t.complaint) out["complaint"] = {{"reason", t.complaint->reason}};
    return out;
  }

  const Project& project(const std::string& name) const { return project_ref(name); }
  const std::map<std::string, Task>& tasks() const { return tasks_; }
  std::uint64_t last_seq() const { return seq_; }

  // Canonical full state (the replay target).
  json state_json() const {
    json projects = json::object();
    for (const auto& [name, p] : projects_) {
      projects[name] = {{"seed", p.seed},         {"annotators", p.annotators}, {"experts", p.experts},
                        {"seniors", p.seniors},   {"tasks", p.task_ids},        {"assignments", p.assignments}};
    }
    json tasks = json::object();
    for (const auto& [id, t] : tasks_) {
      json as = json::array();
      for (const auto& a : t.assignments) {
        json j = {{"annotator", a.annotator}, {"needs_correction", a.needs_correction}};
        if (a.submission) {
          j["submission"] = detail::tree_json(a.submission->tree);
          j["submission"]["multi_structure"] = a.submission->multi_structure;
          j["submission"]["seq"] = a.submission->seq;
        }
        if (a.correction) j["correction"] = detail::tree_json(a.correction->tree);
        as.push_back(j);
      }
      json tj = {{"project", t.project},  {"surface", t.surface},        {"pos", t.pos_hints},
                 {"examples", t.examples}, {"state", state_name(t.state)}, {"assignments", as}};
      if (t.adjudication) tj["adjudication"] = {{"expert", t.adjudication->expert}, {"tree", detail::tree_json(t.adjudication->tree)}};
      if (t.complaint) tj["complaint"] = {{"annotator", t.complaint->annotator}, {"reason", t.complaint->reason}, {"senior", t.complaint->senior}};
      if (t.final_tree) tj["final"] = detail::tree_json(*t.final_tree);
      tasks[id] = tj;
    }
    return {{"seq", seq_}, {"next_task", next_task_}, {"projects", projects}, {"tasks", tasks}};
  }

  static Workflow from_state(const json& s) {
    Workflow w;
    w.seq_ = s.at("seq");
    w.next_task_ = s.at("next_task");
    for (const auto& [name, pj] : s.at("projects").items()) {
      Project p;
      p.name = name;
      p.seed = pj.at("seed");
      p.annotators = pj.at("annotators").get<std::set<std::string>>();
      p.experts = pj.at("experts").get<std::set<std::string>>();
      p.seniors = pj.at("seniors").get<std::set<std::string>>();
      p.task_ids = pj.at("tasks").get<std::vector<std::string>>();
      p.assignments = pj.at("assignments");
      w.projects_[name] = std::move(p);
    }
    for (const auto& [id, tj] : s.at("tasks").items()) {
      Task t;
      t.id = id;
      t.project = tj.at("project");
      t.surface = tj.at("surface");
      t.pos_hints = tj.at("pos").get<std::vector<std::string>>();
      t.examples = tj.at("examples").get<std::vector<std::string>>();
      t.state = parse_state(tj.at("state").get<std::string>());
      for (const auto& aj : tj.at("assignments")) {
        Assignment a;
        a.annotator = aj.at("annotator");
        a.needs_correction = aj.at("needs_correction");
        if (aj.contains("submission")) {
          const auto& sj = aj["submission"];
          a.submission = Submission{a.annotator, detail::tree_from_event(sj), sj.at("multi_structure"), sj.at("seq")};
        }
        if (aj.contains("correction")) a.correction = Submission{a.annotator, detail::tree_from_event(aj["correction"]), false, 0};
        t.assignments.push_back(std::move(a));
      }
      if (tj.contains("adjudication")) {
        t.adjudication = Adjudication{tj["adjudication"].at("expert"), detail::tree_from_event(tj["adjudication"].at("tree"))};
      }
      if (tj.contains("complaint")) {
        const auto& cj = tj["complaint"];
        t.complaint = Complaint{cj.at("annotator"), cj.at("reason"), cj.at("senior")};
      }
      if (tj.contains("final")) t.final_tree = detail::tree_from_event(tj["final"]);
      w.tasks_[id] = std::move(t);
    }
    return w;
  }

  // ---- the only state mutation ----

  void apply(const json& ev) {
    const std::string type = ev.at("type");
    const std::uint64_t seq = ev.at("seq");
    if (seq != seq_ + 1) throw DataError("event log out of order at seq " + std::to_string(seq));
    seq_ = seq;
    if (type == "project") {
      Project p;
      p.name = ev.at("name");
      p.seed = ev.at("seed");
      p.annotators = ev.at("annotators").get<std::set<std::string>>();
      p.experts = ev.at("experts").get<std::set<std::string>>();
      p.seniors = ev.at("seniors").get<std::set<std::string>>();
      projects_[p.name] = std::move(p);
    } else if (type == "import") {
      Project& p = projects_.at(ev.at("project"));
      for (const auto& tj : ev.at("tasks")) {
        Task t;
        t.id = tj.at("id");
        t.project = p.name;
        t.surface = tj.at("surface");
        t.pos_hints = tj.at("pos").get<std::vector<std::string>>();
        t.examples = tj.at("examples").get<std::vector<std::string>>();
        p.task_ids.push_back(t.id);
        ++next_task_;
        tasks_[t.id] = std::move(t);
      }
    } else if (type == "assign") {
      Task& t = tasks_.at(ev.at("task"));
      Assignment a;
      a.annotator = ev.at("annotator");
      t.assignments.push_back(std::move(a));
      ++projects_.at(t.project).assignments;
      t.state = t.assignments.size() == 1 ? TaskState::partially_assigned : TaskState::awaiting_second;
    } else if (type == "submit") {
      Task& t = tasks_.at(ev.at("task"));
      Assignment* a = t.slot_of(ev.at("annotator"));
      a->submission = Submission{a->annotator, detail::tree_from_event(ev), ev.value("multi_structure", false), seq};
      if (t.assignments.size() == 2 && t.assignments[0].submission && t.assignments[1].submission) {
        const DepTree& x = t.assignments[0].submission->tree;
        if (detail::same_tree(x, t.assignments[1].submission->tree)) {
          t.final_tree = x;
          t.state = TaskState::final;
        } else {
          t.state = TaskState::inconsistent;
        }
      }
    } else if (type == "adjudicate") {
      Task& t = tasks_.at(ev.at("task"));
      t.adjudication = Adjudication{ev.at("expert"), detail::tree_from_event(ev)};
      t.state = TaskState::adjudicated;
      bool pending = false;
      for (auto& a : t.assignments) {
        a.needs_correction = !detail::same_tree(a.submission->tree, t.adjudication->tree);
        pending = pending || a.needs_correction;
      }
      if (pending) {
        t.state = TaskState::awaiting_correction;
      } else {
        t.final_tree = t.adjudication->tree;
        t.state = TaskState::final;
      }
    } else if (type == "correct") {
      Task& t = tasks_.at(ev.at("task"));
      Assignment* a = t.slot_of(ev.at("annotator"));
      a->correction = Submission{a->annotator, detail::tree_from_event(ev), false, seq};
      a->needs_correction = false;
      if (std::none_of(t.assignments.begin(), t.assignments.end(), [](const auto& s) { return s.needs_correction; })) {
        t.final_tree = t.adjudication->tree;
        t.state = TaskState::final;
      }
    } else if (type == "complain") {
      Task& t = tasks_.at(ev.at("task"));
      t.complaint = Complaint{ev.at("annotator"), ev.value("reason", ""), ""};
      t.state = TaskState::complained;
    } else if (type == "resolve") {
      Task& t = tasks_.at(ev.at("task"));
      t.complaint->senior = ev.at("senior");
      for (auto& a : t.assignments) a.needs_correction = false;
      t.final_tree = detail::tree_from_event(ev);
      t.state = TaskState::final;
    } else {
      throw DataError("unknown event type '" + type + "'");
    }
  }

 private:
  void commit(json ev) {
    ev["seq"] = seq_ + 1;
    if (on_event) on_event(ev);
    apply(ev);
  }

  Project& project_ref(const std::string& name) {
    auto it = projects_.find(name);
    if (it == projects_.end()) throw WorkflowError(ErrorKind::not_found, "unknown project '" + name + "'");
    return it->second;
  }
  const Project& project_ref(const std::string& name) const { return const_cast<Workflow*>(this)->project_ref(name); }
  Task& task_ref(const std::string& id) { return const_cast<Task&>(task(id)); }

  std::map<std::string, Project> projects_;
  std::map<std::string, Task> tasks_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_task_ = 0;
};

}  // namespace wist::annotation
