#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

enum class EditStage { Edit, ExtractTriplets };

/// What a backend sees for one completion. Remote backends only use
/// `prompt`; the structured fields let offline backends act without
/// re-parsing the prompt.
struct EditRequest {
  std::string prompt;
  EditStage stage = EditStage::Edit;
  TaskCategory category = TaskCategory::Object;
  std::string sample_id;
  std::string instruction;
  std::string response;
  std::vector<std::string> penalty;
  std::optional<std::vector<Triplet>> triplets;
  int pass = 1;
  int attempt = 1;
  std::uint64_t seed = 0;
};

class EditorBackend {
 public:
  virtual ~EditorBackend() = default;
  virtual std::string name() const = 0;
  /// Same request, same output.
  virtual bool deterministic() const = 0;
  /// Raw completion text. Transport failures throw Error{Backend}.
  virtual std::string complete(const EditRequest& req) = 0;
};

class MockBackend final : public EditorBackend {
 public:
  std::string name() const override { return "mock"; }
  bool deterministic() const override { return true; }
  std::string complete(const EditRequest& req) override;
};

/// Replays canned completions per sample id, in order. Running out is a
/// backend error.
class ScriptedBackend final : public EditorBackend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::deque<std::string>> script);
  /// {"sample_id": ["raw completion", ...], ...}
  static std::unique_ptr<ScriptedBackend> from_json(const json& j);

  std::string name() const override { return "scripted"; }
  bool deterministic() const override { return true; }
  std::string complete(const EditRequest& req) override;

  std::size_t calls(const std::string& sample_id) const;
  std::size_t remaining(const std::string& sample_id) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::deque<std::string>> script_;
  std::map<std::string, std::size_t> calls_;
};

struct BackendConfig {
  std::string backend = "mock";  // mock | http | scripted
  std::string endpoint;
  std::string model;
  double temperature = 0.7;
  int timeout_s = 60;
  int max_transport_retries = 3;
  double backoff_base_s = 1.0;
  std::filesystem::path script;  // scripted only

  /// Rejects unknown keys and any key that looks like a credential.
  static BackendConfig from_json(const json& j);
  static BackendConfig load(const std::filesystem::path& path);
};

/// Chat-completion client. The bearer token comes from VAPR_API_KEY.
class HttpBackend final : public EditorBackend {
 public:
  explicit HttpBackend(BackendConfig cfg);
  ~HttpBackend() override;

  std::string name() const override { return "http:" + cfg_.model; }
  bool deterministic() const override { return false; }
  std::string complete(const EditRequest& req) override;

  /// Transport attempts made by the last complete() call.
  int last_attempts() const { return last_attempts_; }

 private:
  BackendConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  int last_attempts_ = 0;
};

std::unique_ptr<EditorBackend> make_backend(const BackendConfig& cfg);

}  // namespace hardneg
