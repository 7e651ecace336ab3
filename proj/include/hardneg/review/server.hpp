#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "hardneg/review/store.hpp"

namespace httplib {
class Server;
}

namespace hardneg::review {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0: pick a free port
  std::optional<std::filesystem::path> images_root;
  /// Base for relative `pairs_file` values in POST /api/sessions.
  std::filesystem::path pairs_root = ".";
};

/// JSON API over a SessionStore:
///   POST /api/sessions                       {pairs_file, n, annotators, seed} -> 201 {session_id}
///   GET  /api/sessions/{id}/next?annotator=A -> task or {done: true}
///   POST /api/sessions/{id}/labels           {annotator, pair_id, label} -> 204
///   GET  /api/sessions/{id}/stats
///   GET  /api/sessions/{id}/export           labels as JSONL
///   GET  /images/...                         files under images_root
class ReviewServer {
 public:
  ReviewServer(SessionStore& store, ServerOptions opt);
  ~ReviewServer();

  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  void routes();
  int bind();

  SessionStore& store_;
  ServerOptions opt_;
  std::unique_ptr<httplib::Server> srv_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace hardneg::review
