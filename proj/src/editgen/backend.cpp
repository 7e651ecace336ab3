#include "hardneg/editgen/backend.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>

#include "hardneg/editgen/mock.hpp"
#include "hardneg/editgen/penalty.hpp"

namespace hardneg {

std::string MockBackend::complete(const EditRequest& req) {
  if (req.stage == EditStage::ExtractTriplets) return format_triplet_completion(mock_extract_triplets(req.response));
  const auto* triplets = req.triplets ? &*req.triplets : nullptr;
  auto r = mock_edit(req.category, req.response, req.penalty, req.seed, triplets);
  return format_completion(req.category, req.response, r);
}

ScriptedBackend::ScriptedBackend(std::map<std::string, std::deque<std::string>> script)
    : script_(std::move(script)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::Config, "script must be an object of sample id -> completions");
  std::map<std::string, std::deque<std::string>> script;
  for (const auto& [id, list] : j.items()) {
    if (!list.is_array()) throw Error(Errc::Config, "script entry \"" + id + "\" must be a list");
    for (const auto& raw : list) {
      if (!raw.is_string()) throw Error(Errc::Config, "script entry \"" + id + "\" must hold strings");
      script[id].push_back(raw.get<std::string>());
    }
  }
  return std::make_unique<ScriptedBackend>(std::move(script));
}

std::string ScriptedBackend::complete(const EditRequest& req) {
  std::lock_guard lock(mu_);
  ++calls_[req.sample_id];
  auto it = script_.find(req.sample_id);
  if (it == script_.end() || it->second.empty())
    throw Error(Errc::Backend, "script exhausted for sample " + req.sample_id);
  auto raw = std::move(it->second.front());
  it->second.pop_front();
  return raw;
}

std::size_t ScriptedBackend::calls(const std::string& sample_id) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(sample_id);
  return it == calls_.end() ? 0 : it->second;
}

std::size_t ScriptedBackend::remaining(const std::string& sample_id) const {
  std::lock_guard lock(mu_);
  auto it = script_.find(sample_id);
  return it == script_.end() ? 0 : it->second.size();
}

BackendConfig BackendConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::Config, "backend config must be a JSON object");
  BackendConfig c;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "backend")
        c.backend = v.get<std::string>();
      else if (key == "endpoint")
        c.endpoint = v.get<std::string>();
      else if (key == "model")
        c.model = v.get<std::string>();
      else if (key == "temperature")
        c.temperature = v.get<double>();
      else if (key == "timeout_s")
        c.timeout_s = v.get<int>();
      else if (key == "max_transport_retries")
        c.max_transport_retries = v.get<int>();
      else if (key == "backoff_base_s")
        c.backoff_base_s = v.get<double>();
      else if (key == "script")
        c.script = v.get<std::string>();
      else if (key.find("key") != std::string::npos || key.find("token") != std::string::npos)
        throw Error(Errc::Config, "credentials are read from VAPR_API_KEY, not the config file (\"" + key + "\")");
      else
        throw Error(Errc::Config, "unknown backend config key \"" + key + "\"");
    } catch (const json::exception&) {
      throw Error(Errc::Config, "backend config key \"" + key + "\" has the wrong type");
    }
  }
  if (c.backend != "mock" && c.backend != "http" && c.backend != "scripted")
    throw Error(Errc::Config, "backend must be mock, http or scripted");
  if (c.backend == "http" && c.endpoint.empty()) throw Error(Errc::Config, "http backend needs an endpoint");
  if (c.backend == "scripted" && c.script.empty()) throw Error(Errc::Config, "scripted backend needs a script path");
  if (c.timeout_s <= 0) throw Error(Errc::Config, "timeout_s must be positive");
  if (c.max_transport_retries < 0) throw Error(Errc::Config, "max_transport_retries must be >= 0");
  return c;
}

BackendConfig BackendConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::Config, path.string() + ": " + e.what());
  }
  auto c = from_json(j);
  if (!c.script.empty() && c.script.is_relative()) c.script = path.parent_path() / c.script;
  return c;
}

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.endpoint, m, url)) throw Error(Errc::Config, "endpoint is not an http(s) URL: " + cfg_.endpoint);
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (const char* key = std::getenv("VAPR_API_KEY")) api_key_ = key;
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const EditRequest& req) {
  const json body = {{"model", cfg_.model},
                     {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
                     {"temperature", cfg_.temperature}};
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string last_error;
  last_attempts_ = 0;
  for (int attempt = 0; attempt <= cfg_.max_transport_retries; ++attempt) {
    if (attempt > 0) {
      const double wait = cfg_.backoff_base_s * static_cast<double>(1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    ++last_attempts_;
    httplib::Client cli(scheme_host_port_);
    cli.set_connection_timeout(cfg_.timeout_s, 0);
    cli.set_read_timeout(cfg_.timeout_s, 0);
    cli.set_write_timeout(cfg_.timeout_s, 0);
    auto res = cli.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw Error(Errc::Backend, "HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
      auto j = json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(Errc::Backend, std::string("malformed completion payload: ") + e.what());
    }
  }
  throw Error(Errc::Backend, "gave up after " + std::to_string(last_attempts_) + " attempts (" + last_error + ")");
}

std::unique_ptr<EditorBackend> make_backend(const BackendConfig& cfg) {
  if (cfg.backend == "mock") return std::make_unique<MockBackend>();
  if (cfg.backend == "http") return std::make_unique<HttpBackend>(cfg);
  json script;
  try {
    script = json::parse(read_file(cfg.script));
  } catch (const json::parse_error& e) {
    throw Error(Errc::Config, cfg.script.string() + ": " + e.what());
  }
  return ScriptedBackend::from_json(script);
}

}  // namespace hardneg
