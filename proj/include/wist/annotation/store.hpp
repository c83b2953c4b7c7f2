#pragma once

// Durable workflow state: an append-only JSONL event log plus an optional
// snapshot of the full state. Opening a directory loads the snapshot and
// replays the events after it.

#include <filesystem>
#include <fstream>
#include <string>

#include "wist/annotation/workflow.hpp"

namespace wist::annotation {

class Store {
 public:
  // snapshot_every = 0 disables automatic snapshots.
  explicit Store(std::filesystem::path dir, std::size_t snapshot_every = 0)
      : dir_(std::move(dir)), snapshot_every_(snapshot_every) {
    std::filesystem::create_directories(dir_);
    wf_ = load(dir_);
    log_.open(log_path(dir_), std::ios::app | std::ios::binary);
    if (!log_) throw DataError("cannot open event log " + log_path(dir_).string());
    wf_.on_event = [this](const json& ev) { append(ev); };
  }

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  Workflow& workflow() { return wf_; }
  const Workflow& workflow() const { return wf_; }

  // Writes the full state; the rename makes it atomic.
  void snapshot() {
    const auto tmp = dir_ / "snapshot.json.tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << wf_.state_json().dump();
      if (!out) throw DataError("cannot write snapshot");
    }
    std::filesystem::rename(tmp, snapshot_path(dir_));
  }

  // Call after a command returns; takes the snapshot scheduled by append().
  void maybe_snapshot() {
    if (pending_snapshot_) {
      pending_snapshot_ = false;
      snapshot();
    }
  }

  static std::filesystem::path log_path(const std::filesystem::path& d) { return d / "events.jsonl"; }
  static std::filesystem::path snapshot_path(const std::filesystem::path& d) { return d / "snapshot.json"; }

  // Rebuilds state from `dir`. With use_snapshot=false the whole log is replayed.
  // A torn final line (crash mid-append) is cut off; corruption elsewhere is an error.
  static Workflow load(const std::filesystem::path& dir, bool use_snapshot = true) {
    Workflow wf;
    if (use_snapshot && std::filesystem::exists(snapshot_path(dir))) {
      wf = Workflow::from_state(json::parse(read_file(snapshot_path(dir))));
    }
    const auto lp = log_path(dir);
    if (!std::filesystem::exists(lp)) return wf;
    const std::string text = read_file(lp);
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      ++line_no;
      if (nl == std::string::npos) {
        std::filesystem::resize_file(lp, pos);  // torn tail
        break;
      }
      const std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.empty()) continue;
      json ev;
      try {
        ev = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError(lp.string() + ":" + std::to_string(line_no) + ": corrupt event: " + e.what());
      }
      if (ev.at("seq").get<std::uint64_t>() <= wf.last_seq()) continue;  // covered by the snapshot
      wf.apply(ev);
    }
    return wf;
  }

 private:
  void append(const json& ev) {
    log_ << ev.dump() << '\n';
    log_.flush();
    if (!log_) throw DataError("event log write failed");
    if (snapshot_every_ && ev.at("seq").get<std::uint64_t>() % snapshot_every_ == 0) pending_snapshot_ = true;
  }

  std::filesystem::path dir_;
  std::size_t snapshot_every_;
  Workflow wf_;
  std::ofstream log_;
  bool pending_snapshot_ = false;
};

}  // namespace wist::annotation
