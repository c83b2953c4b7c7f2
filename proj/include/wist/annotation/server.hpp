#pragma once

// JSON-over-HTTP front end for the workflow. One mutex serializes every
// request, so concurrent next-task calls never hand out the same slot twice.
//
//   POST /projects                          {"name","seed","annotators","experts","seniors"}
//   POST /projects/{p}/tasks:import         {"tasks":[{"surface","pos_hints","examples"}]}
//   GET  /projects/{p}/next-task?annotator=A
//   POST /tasks/{t}/submit                  {"annotator","heads","labels","multi_structure"}
//   POST /tasks/{t}/adjudicate              {"expert","heads","labels"}
//   POST /tasks/{t}/complain                {"annotator","reason"}
//   POST /tasks/{t}/resolve                 {"senior","heads","labels"}
//   GET  /tasks/{t}?viewer=X
//   GET  /projects/{p}/export?part=final|slot1|slot2   (.wist text)
//   GET  /projects/{p}/stats
//
// Errors: {"error": message, "violations": [...]} with 400, 404, 409 or 422.

#include <functional>
#include <mutex>
#include <string>

#include "httplib.h"
#include "wist/annotation/store.hpp"

namespace wist::annotation {

class Server {
 public:
  explicit Server(Store& store) : store_(store) { routes(); }

  // Binds to an OS-chosen port on `host` and returns it; -1 on failure.
  int bind_any(const std::string& host = "127.0.0.1") { return http_.bind_to_any_port(host); }
  bool bind(const std::string& host, int port) { return http_.bind_to_port(host, port); }
  // Blocks until stop().
  bool run() { return http_.listen_after_bind(); }
  void stop() { http_.stop(); }
  void wait_until_ready() { http_.wait_until_ready(); }

 private:
  using Handler = std::function<json(const httplib::Request&)>;

  void routes() {
    post(R"(/projects)", [this](const httplib::Request& req) {
      json b = body(req);
      wf().create_project(str(b, "name"), b.value("seed", std::uint64_t{1}), list(b, "annotators"), list(b, "experts"),
                          list(b, "seniors"));
      return json{{"name", b["name"]}};
    });
    post(R"(/projects/([^/]+)/tasks:import)", [this](const httplib::Request& req) {
      json b = body(req);
      if (!b.contains("tasks") || !b["tasks"].is_array()) throw WorkflowError(ErrorKind::bad_request, "'tasks' array required");
      std::vector<TaskImport> items;
      for (const auto& t : b["tasks"]) {
        if (t.is_string()) {
          items.push_back({t.get<std::string>(), {}, {}});
          continue;
        }
        if (!t.is_object()) throw WorkflowError(ErrorKind::bad_request, "task must be a string or an object");
        items.push_back({str(t, "surface"), list(t, "pos_hints"), list(t, "examples")});
      }
      auto ids = wf().import_tasks(req.matches[1], items);
      return json{{"count", ids.size()}, {"ids", ids}};
    });
    get(R"(/projects/([^/]+)/next-task)", [this](const httplib::Request& req) {
      const Task& t = wf().next_task(req.matches[1], param(req, "annotator"));
      return wf().task_view(t.id, param(req, "annotator"));
    });
    post(R"(/tasks/([^/]+)/submit)", [this](const httplib::Request& req) {
      json b = body(req);
      return state_reply(wf().submit(req.matches[1], str(b, "annotator"), b));
    });
    post(R"(/tasks/([^/]+)/adjudicate)", [this](const httplib::Request& req) {
      json b = body(req);
      return state_reply(wf().adjudicate(req.matches[1], str(b, "expert"), b));
    });
    post(R"(/tasks/([^/]+)/complain)", [this](const httplib::Request& req) {
      json b = body(req);
      return state_reply(wf().complain(req.matches[1], str(b, "annotator"), b.value("reason", "")));
    });
    post(R"(/tasks/([^/]+)/resolve)", [this](const httplib::Request& req) {
      json b = body(req);
      return state_reply(wf().resolve_complaint(req.matches[1], str(b, "senior"), b));
    });
    get(R"(/tasks/([^/]+))", [this](const httplib::Request& req) {
      return wf().task_view(req.matches[1], req.get_param_value("viewer"));
    });
    // Raw `.wist` text, not JSON.
    http_.Get(R"(/projects/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto ex = wf().export_final(req.matches[1]);
        const std::string part = req.has_param("part") ? req.get_param_value("part") : "final";
        if (part != "final" && part != "slot1" && part != "slot2") {
          throw WorkflowError(ErrorKind::bad_request, "part must be final, slot1 or slot2");
        }
        const Treebank& tb = part == "final" ? ex.final : part == "slot1" ? ex.slot1.tb : ex.slot2.tb;
        res.set_content(serialize_treebank(tb), "text/plain; charset=utf-8");
      });
    });
    get(R"(/projects/([^/]+)/stats)", [this](const httplib::Request& req) { return wf().stats(req.matches[1]); });
  }

  Workflow& wf() { return store_.workflow(); }

  void post(const std::string& pattern, Handler h) { http_.Post(pattern, wrap(std::move(h))); }
  void get(const std::string& pattern, Handler h) { http_.Get(pattern, wrap(std::move(h))); }

  httplib::Server::Handler wrap(Handler h) {
    return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { res.set_content(h(req).dump(), "application/json"); });
    };
  }

  // Runs `fn` under the lock and maps failures to status codes.
  void guarded(httplib::Response& res, const std::function<void()>& fn) {
    std::lock_guard<std::mutex> lock(mu_);
    try {
      res.status = 200;
      fn();
      store_.maybe_snapshot();
      return;
    } catch (const WorkflowError& e) {
      res.status = e.status();
      res.set_content(json{{"error", e.what()}, {"violations", e.violations}}.dump(), "application/json");
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", std::string("bad JSON: ") + e.what()}, {"violations", json::array()}}.dump(),
                      "application/json");
    }
  }

  static json state_reply(TaskState s) { return {{"state", state_name(s)}}; }

  static json body(const httplib::Request& req) {
    json b = json::parse(req.body);
    if (!b.is_object()) throw WorkflowError(ErrorKind::bad_request, "request body must be a JSON object");
    return b;
  }
  static std::string str(const json& b, const char* key) {
    if (!b.contains(key) || !b[key].is_string()) {
      throw WorkflowError(ErrorKind::bad_request, std::string("'") + key + "' string required");
    }
    return b[key];
  }
  static std::vector<std::string> list(const json& b, const char* key) {
    if (!b.contains(key)) return {};
    if (!b[key].is_array()) throw WorkflowError(ErrorKind::bad_request, std::string("'") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& x : b[key]) {
      if (!x.is_string()) throw WorkflowError(ErrorKind::bad_request, std::string("'") + key + "' must hold strings");
      out.push_back(x);
    }
    return out;
  }
  static std::string param(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) throw WorkflowError(ErrorKind::bad_request, std::string("query parameter '") + key + "' required");
    return req.get_param_value(key);
  }

  Store& store_;
  std::mutex mu_;
  httplib::Server http_;
};

}  // namespace wist::annotation
