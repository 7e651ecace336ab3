#include "hardneg/review/store.hpp"

#include <mutex>

namespace hardneg::review {

SessionStore::SessionStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_ / "sessions");
  for (const auto& entry : std::filesystem::directory_iterator(root_ / "sessions")) {
    if (entry.path().extension() != ".json") continue;
    json j;
    try {
      j = json::parse(read_file(entry.path()));
    } catch (const json::parse_error& e) {
      throw Error(Errc::MalformedLine, entry.path().string() + ": " + e.what());
    }
    auto s = std::make_shared<const AnnotationSession>(AnnotationSession::from_json(j));
    sessions_.emplace(s->session_id, std::move(s));
  }
}

std::filesystem::path SessionStore::path_for(const std::string& id) const { return root_ / "sessions" / (id + ".json"); }

void SessionStore::persist(const AnnotationSession& s) const { atomic_write(path_for(s.session_id), s.to_json().dump()); }

std::shared_ptr<const AnnotationSession> SessionStore::create(const std::vector<PreferencePair>& pairs, std::size_t n,
                                                              const std::vector<std::string>& annotators,
                                                              std::uint64_t seed, const std::string& pairs_file) {
  const auto id = session_id_for(pairs_file, n, annotators, seed);
  {
    std::shared_lock lock(mu_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  }
  auto built = std::make_shared<const AnnotationSession>(create_session(pairs, n, annotators, seed, pairs_file));
  std::unique_lock lock(mu_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  persist(*built);
  sessions_.emplace(id, built);
  return built;
}

std::shared_ptr<const AnnotationSession> SessionStore::get(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::UnknownSession, "no session " + id);
  return it->second;
}

void SessionStore::label(const std::string& id, const std::string& annotator, const std::string& pair_id, Label l) {
  std::unique_lock lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::UnknownSession, "no session " + id);
  auto next = std::make_shared<AnnotationSession>(*it->second);
  submit_label(*next, annotator, pair_id, l);
  persist(*next);
  it->second = std::move(next);
}

std::vector<std::string> SessionStore::ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

}  // namespace hardneg::review
