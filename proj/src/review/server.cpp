#include "hardneg/review/server.hpp"

#include <sstream>

#include <httplib.h>

#include "hardneg/text.hpp"

namespace hardneg::review {

namespace {

int status_for(Errc c) {
  switch (c) {
    case Errc::UnknownSession:
    case Errc::UnknownTask: return 404;
    case Errc::DuplicateLabel: return 409;
    case Errc::NotEnoughPairs:
    case Errc::InfeasibleOrdering: return 422;
    case Errc::UnknownAnnotator:
    case Errc::Usage:
    case Errc::Io:
    case Errc::MalformedLine:
    case Errc::InvariantViolation: return 400;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& msg) {
  send_json(res, status, {{"error", code}, {"message", msg}});
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, status_for(e.code()), errc_name(e.code()), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "BadRequest", e.what());
  }
}

std::vector<std::string> annotator_list(const json& v) {
  if (v.is_array()) return v.get<std::vector<std::string>>();
  std::vector<std::string> out;
  std::stringstream in(v.get<std::string>());
  std::string item;
  while (std::getline(in, item, ','))
    if (auto t = text::trim(item); !t.empty()) out.emplace_back(t);
  return out;
}

}  // namespace

ReviewServer::ReviewServer(SessionStore& store, ServerOptions opt)
    : store_(store), opt_(std::move(opt)), srv_(std::make_unique<httplib::Server>()) {
  routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::routes() {
  auto& s = *srv_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      std::filesystem::path file = body.at("pairs_file").get<std::string>();
      if (file.is_relative()) file = opt_.pairs_root / file;
      const auto pairs = load_pairs(file);
      const auto n = body.at("n").get<std::size_t>();
      const auto annotators = annotator_list(body.at("annotators"));
      const auto seed = body.value("seed", std::uint64_t{0});
      auto session = store_.create(pairs, n, annotators, seed, body.at("pairs_file").get<std::string>());
      send_json(res, 201, {{"session_id", session->session_id}, {"total", session->tasks.size()}});
    });
  });

  s.Get(R"(/api/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto session = store_.get(req.matches[1]);
      if (!req.has_param("annotator")) throw Error(Errc::Usage, "missing ?annotator=");
      const auto idx = next_task(*session, req.get_param_value("annotator"));
      if (!idx) {
        send_json(res, 200, {{"done", true}, {"total", session->tasks.size()}});
        return;
      }
      const auto& t = session->tasks[*idx];
      send_json(res, 200,
                {{"pair_id", t.pair_id},
                 {"image_ref", t.image_ref},
                 {"instruction", t.instruction},
                 {"chosen", t.chosen},
                 {"rejected", t.rejected},
                 {"index", *idx},
                 {"total", session->tasks.size()}});
    });
  });

  s.Post(R"(/api/sessions/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      const auto label_text = body.at("label").get<std::string>();
      auto label = parse_label(label_text);
      if (!label) throw Error(Errc::Usage, "label must be hard_negative or not_hard_negative");
      store_.label(req.matches[1], body.at("annotator").get<std::string>(), body.at("pair_id").get<std::string>(),
                   *label);
      res.status = 204;
    });
  });

  s.Get(R"(/api/sessions/([^/]+)/stats)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, session_stats(*store_.get(req.matches[1])).to_json()); });
  });

  s.Get(R"(/api/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.status = 200;
      res.set_content(export_labels(*store_.get(req.matches[1])), "application/x-ndjson");
    });
  });

  if (opt_.images_root) {
    if (!srv_->set_mount_point("/images", opt_.images_root->string()))
      throw Error(Errc::Config, "image root is not a directory: " + opt_.images_root->string());
  }
}

int ReviewServer::bind() {
  port_ = opt_.port == 0 ? srv_->bind_to_any_port(opt_.host) : (srv_->bind_to_port(opt_.host, opt_.port) ? opt_.port : -1);
  if (port_ < 0) throw Error(Errc::Io, "cannot bind " + opt_.host + ":" + std::to_string(opt_.port));
  return port_;
}

int ReviewServer::start() {
  bind();
  thread_ = std::thread([this] { srv_->listen_after_bind(); });
  srv_->wait_until_ready();
  return port_;
}

void ReviewServer::run() {
  bind();
  srv_->listen_after_bind();
}

void ReviewServer::stop() {
  if (srv_) srv_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hardneg::review
