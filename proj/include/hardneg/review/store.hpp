#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include "hardneg/review/session.hpp"

namespace hardneg::review {

/// Sessions persisted as one JSON document each under `<root>/sessions/`.
/// Every mutation is written (temp file, fsync, rename) before it returns,
/// so a returned call is durable. Readers get immutable snapshots.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  /// Builds the session, or returns the existing one with the same id.
  std::shared_ptr<const AnnotationSession> create(const std::vector<PreferencePair>& pairs, std::size_t n,
                                                  const std::vector<std::string>& annotators, std::uint64_t seed,
                                                  const std::string& pairs_file);

  /// UnknownSession when absent.
  std::shared_ptr<const AnnotationSession> get(const std::string& id) const;

  void label(const std::string& id, const std::string& annotator, const std::string& pair_id, Label label);

  std::vector<std::string> ids() const;
  std::filesystem::path path_for(const std::string& id) const;

 private:
  void persist(const AnnotationSession& s) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const AnnotationSession>> sessions_;
};

}  // namespace hardneg::review
