#include "hardneg/editgen/penalty.hpp"

#include <algorithm>

#include "hardneg/editgen/lexicon.hpp"
#include "hardneg/text.hpp"

namespace hardneg {

PenaltyList::PenaltyList(TaskCategory category, std::size_t capacity, std::size_t cadence)
    : category_(category), capacity_(capacity), cadence_(cadence) {
  if (cadence_ == 0) throw Error(Errc::Config, "penalty cadence must be >= 1");
}

std::string normalize_value(std::string_view v) { return text::normalize_ws(text::to_lower(v)); }

void PenaltyList::record_acceptance(const std::vector<std::string>& new_values) {
  for (const auto& v : new_values) {
    auto n = normalize_value(v);
    if (!n.empty()) ++window_[n];
  }
  if (++since_refresh_ >= cadence_) refresh();
}

void PenaltyList::refresh() {
  std::vector<std::pair<std::string, std::size_t>> ranked(window_.begin(), window_.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  values_.clear();
  for (std::size_t i = 0; i < ranked.size() && i < capacity_; ++i) values_.push_back(ranked[i].first);
  window_.clear();
  since_refresh_ = 0;
}

void PenaltyList::set_values(std::vector<std::string> values) {
  for (auto& v : values) v = normalize_value(v);
  if (values.size() > capacity_) values.resize(capacity_);
  values_ = std::move(values);
}

json PenaltyList::state() const {
  return {{"category", to_string(category_)}, {"capacity", capacity_}, {"cadence", cadence_},
          {"values", values_},               {"window", window_},     {"since_refresh", since_refresh_}};
}

PenaltyList PenaltyList::from_state(const json& j) {
  auto cat = parse_category(j.at("category").get<std::string>());
  if (!cat) throw Error(Errc::Config, "penalty state: unknown category");
  PenaltyList p(*cat, j.at("capacity").get<std::size_t>(), j.at("cadence").get<std::size_t>());
  p.values_ = j.at("values").get<std::vector<std::string>>();
  p.window_ = j.at("window").get<std::map<std::string, std::size_t>>();
  p.since_refresh_ = j.at("since_refresh").get<std::size_t>();
  return p;
}

namespace {

bool same_value(TaskCategory c, const std::string& a, const std::string& b) {
  if (a == b) return true;
  if (c != TaskCategory::Counting) return false;
  auto x = lexicon::number_value(a);
  auto y = lexicon::number_value(b);
  return x && y && *x == *y;
}

}  // namespace

std::vector<std::string> conflicting_values(const std::vector<std::string>& new_values, const PenaltyList& penalty) {
  std::vector<std::string> out;
  for (const auto& raw : new_values) {
    auto v = normalize_value(raw);
    for (const auto& p : penalty.values())
      if (same_value(penalty.category(), v, p)) {
        out.push_back(v);
        break;
      }
  }
  return out;
}

bool check_penalty_conflict(const std::vector<std::string>& new_values, const PenaltyList& penalty) {
  return !conflicting_values(new_values, penalty).empty();
}

}  // namespace hardneg
