#include "hardneg/review/session.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>

#include "hardneg/apportion.hpp"
#include "hardneg/rng.hpp"
#include "hardneg/stats.hpp"

namespace hardneg::review {

std::string_view to_string(Label l) { return l == Label::HardNegative ? "hard_negative" : "not_hard_negative"; }

std::optional<Label> parse_label(std::string_view s) {
  if (s == "hard_negative") return Label::HardNegative;
  if (s == "not_hard_negative") return Label::NotHardNegative;
  return std::nullopt;
}

std::optional<std::size_t> AnnotationSession::task_index(const std::string& pair_id) const {
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (tasks[i].pair_id == pair_id) return i;
  return std::nullopt;
}

std::optional<Label> AnnotationSession::label_of(const std::string& annotator, const std::string& pair_id) const {
  for (const auto& l : labels)
    if (l.annotator == annotator && l.pair_id == pair_id) return l.label;
  return std::nullopt;
}

bool AnnotationSession::has_annotator(const std::string& a) const {
  return std::find(annotators.begin(), annotators.end(), a) != annotators.end();
}

json AnnotationSession::to_json() const {
  json t = json::array();
  for (const auto& task : tasks)
    t.push_back({{"pair_id", task.pair_id},
                 {"category", hardneg::to_string(task.category)},
                 {"image_ref", task.image_ref},
                 {"instruction", task.instruction},
                 {"chosen", task.chosen},
                 {"rejected", task.rejected}});
  json l = json::array();
  for (const auto& e : labels)
    l.push_back({{"annotator", e.annotator}, {"pair_id", e.pair_id}, {"label", to_string(e.label)}, {"seq", e.seq}});
  return {{"session_id", session_id}, {"created_at", created_at}, {"seed", seed},   {"pairs_file", pairs_file},
          {"n", n},                   {"annotators", annotators}, {"tasks", t},     {"labels", l}};
}

AnnotationSession AnnotationSession::from_json(const json& j) {
  try {
    AnnotationSession s;
    s.session_id = j.at("session_id").get<std::string>();
    s.created_at = j.at("created_at").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.pairs_file = j.at("pairs_file").get<std::string>();
    s.n = j.at("n").get<std::size_t>();
    s.annotators = j.at("annotators").get<std::vector<std::string>>();
    for (const auto& t : j.at("tasks")) {
      ReviewTask task;
      task.pair_id = t.at("pair_id").get<std::string>();
      auto c = parse_category(t.at("category").get<std::string>());
      if (!c) throw Error(Errc::MalformedLine, "unknown category in session task");
      task.category = *c;
      task.image_ref = t.at("image_ref").get<std::string>();
      task.instruction = t.at("instruction").get<std::string>();
      task.chosen = t.at("chosen").get<std::string>();
      task.rejected = t.at("rejected").get<std::string>();
      s.tasks.push_back(std::move(task));
    }
    for (const auto& l : j.at("labels")) {
      auto label = parse_label(l.at("label").get<std::string>());
      if (!label) throw Error(Errc::MalformedLine, "unknown label in session file");
      s.labels.push_back({l.at("annotator").get<std::string>(), l.at("pair_id").get<std::string>(), *label,
                          l.at("seq").get<std::uint64_t>()});
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedLine, std::string("session file: ") + e.what());
  }
}

std::string session_id_for(const std::string& pairs_file, std::size_t n, const std::vector<std::string>& annotators,
                           std::uint64_t seed) {
  std::uint64_t h = derive_seed(seed, pairs_file);
  h = derive_seed(h, static_cast<std::uint64_t>(n));
  for (const auto& a : annotators) h = derive_seed(h, a);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::map<TaskCategory, std::size_t> session_quotas(const std::map<TaskCategory, std::size_t>& available,
                                                  std::size_t n) {
  std::vector<TaskCategory> cats;
  std::vector<double> w;
  std::vector<std::size_t> caps;
  for (auto c : kAllCategories) {
    auto it = available.find(c);
    if (it == available.end() || it->second == 0) continue;
    cats.push_back(c);
    w.push_back(1.0);
    caps.push_back(it->second);
  }
  const auto q = apportion(n, w, caps);
  std::map<TaskCategory, std::size_t> out;
  for (std::size_t i = 0; i < cats.size(); ++i) out[cats[i]] = q[i];
  return out;
}

namespace {

// Can `cnt` (summing to len) be laid out with no equal neighbours and
// without `prev` in the first slot?
bool orderable(const std::map<TaskCategory, std::size_t>& cnt, std::size_t len, std::optional<TaskCategory> prev) {
  for (const auto& [c, k] : cnt) {
    const std::size_t bound = (prev && c == *prev) ? len / 2 : (len + 1) / 2;
    if (k > bound) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> order_without_repeats(const std::vector<TaskCategory>& cats, std::uint64_t seed) {
  const std::size_t n = cats.size();
  std::map<TaskCategory, std::size_t> cnt;
  for (auto c : cats) ++cnt[c];
  if (!orderable(cnt, n, std::nullopt)) {
    std::size_t mx = 0;
    for (const auto& [c, k] : cnt) mx = std::max(mx, k);
    throw Error(Errc::InfeasibleOrdering, "a category holds " + std::to_string(mx) + " of " + std::to_string(n) +
                                              " tasks; at most " + std::to_string((n + 1) / 2) + " can avoid adjacency");
  }
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  Rng rng(derive_seed(seed, "order"));
  rng.shuffle(pool);

  std::vector<std::size_t> out;
  out.reserve(n);
  std::optional<TaskCategory> prev;
  while (!pool.empty()) {
    bool placed = false;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const auto c = cats[pool[k]];
      if (prev && c == *prev) continue;
      --cnt[c];
      if (orderable(cnt, pool.size() - 1, c)) {
        out.push_back(pool[k]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
        prev = c;
        placed = true;
        break;
      }
      ++cnt[c];
    }
    if (!placed) throw Error(Errc::InvariantViolation, "ordering repair stalled");
  }
  return out;
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

AnnotationSession create_session(const std::vector<PreferencePair>& pairs, std::size_t n,
                                 const std::vector<std::string>& annotators, std::uint64_t seed,
                                 const std::string& pairs_file) {
  if (n == 0) throw Error(Errc::Usage, "session size must be positive");
  if (n > pairs.size())
    throw Error(Errc::NotEnoughPairs, "asked for " + std::to_string(n) + " tasks from " + std::to_string(pairs.size()) +
                                          " pairs");
  if (annotators.empty()) throw Error(Errc::Usage, "a session needs at least one annotator");
  if (std::set<std::string>(annotators.begin(), annotators.end()).size() != annotators.size())
    throw Error(Errc::Usage, "annotator ids must be distinct");

  std::map<TaskCategory, std::vector<const PreferencePair*>> by_cat;
  for (const auto& p : pairs) by_cat[p.category].push_back(&p);
  std::map<TaskCategory, std::size_t> available;
  for (const auto& [c, v] : by_cat) available[c] = v.size();
  const auto quotas = session_quotas(available, n);

  std::vector<const PreferencePair*> picked;
  for (const auto& [c, q] : quotas) {
    auto members = by_cat[c];
    Rng rng(derive_seed(seed, "select:" + std::string(to_string(c))));
    rng.shuffle(members);
    members.resize(q);
    std::sort(members.begin(), members.end());
    picked.insert(picked.end(), members.begin(), members.end());
  }

  std::vector<TaskCategory> cats;
  for (const auto* p : picked) cats.push_back(p->category);
  const auto order = order_without_repeats(cats, seed);

  AnnotationSession s;
  s.session_id = session_id_for(pairs_file, n, annotators, seed);
  s.annotators = annotators;
  s.created_at = utc_now();
  s.seed = seed;
  s.pairs_file = pairs_file;
  s.n = n;
  for (auto i : order) {
    const auto& p = *picked[i];
    s.tasks.push_back({p.id, p.category, p.image_ref.value_or(""), p.instruction, p.chosen, p.rejected});
  }
  return s;
}

std::optional<std::size_t> next_task(const AnnotationSession& s, const std::string& annotator) {
  if (!s.has_annotator(annotator)) throw Error(Errc::UnknownAnnotator, "unknown annotator " + annotator);
  std::set<std::string> done;
  for (const auto& l : s.labels)
    if (l.annotator == annotator) done.insert(l.pair_id);
  for (std::size_t i = 0; i < s.tasks.size(); ++i)
    if (!done.count(s.tasks[i].pair_id)) return i;
  return std::nullopt;
}

void submit_label(AnnotationSession& s, const std::string& annotator, const std::string& pair_id, Label label) {
  if (!s.has_annotator(annotator)) throw Error(Errc::UnknownAnnotator, "unknown annotator " + annotator);
  if (!s.task_index(pair_id)) throw Error(Errc::UnknownTask, "pair " + pair_id + " is not in this session");
  if (s.label_of(annotator, pair_id))
    throw Error(Errc::DuplicateLabel, annotator + " already labeled " + pair_id);
  s.labels.push_back({annotator, pair_id, label, s.labels.size()});
}

json SessionStats::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"completed", completed},         {"total_tasks", total_tasks}, {"fully_labeled", fully_labeled},
          {"alignment_pct", alignment ? json(*alignment * 100.0) : json(nullptr)},
          {"alignment", opt(alignment)},    {"kappa", opt(kappa)},        {"kappa_degenerate", kappa_degenerate}};
}

SessionStats session_stats(const AnnotationSession& s) {
  SessionStats st;
  st.total_tasks = s.tasks.size();
  std::map<std::string, std::map<std::string, Label>> by_pair;  // pair -> annotator -> label
  std::map<std::string, std::size_t> per_annotator;
  for (const auto& l : s.labels) {
    by_pair[l.pair_id][l.annotator] = l.label;
    ++per_annotator[l.annotator];
  }
  for (const auto& a : s.annotators)
    st.completed[a] = s.tasks.empty() ? 0.0 : static_cast<double>(per_annotator[a]) / static_cast<double>(s.tasks.size());

  const std::size_t raters = s.annotators.size();
  stats::AgreementTable table;
  std::size_t aligned = 0;
  for (const auto& t : s.tasks) {
    auto it = by_pair.find(t.pair_id);
    if (it == by_pair.end() || it->second.size() != raters) continue;
    std::int64_t hn = 0;
    for (const auto& [a, l] : it->second) hn += l == Label::HardNegative;
    table.push_back({hn, static_cast<std::int64_t>(raters) - hn});
    if (2 * static_cast<std::size_t>(hn) > raters) ++aligned;
  }
  st.fully_labeled = table.size();
  if (table.empty()) return st;
  st.alignment = static_cast<double>(aligned) / static_cast<double>(table.size());
  if (raters >= 2) {
    const auto k = stats::fleiss_kappa(table);
    if (k.kappa) {
      st.kappa = k.kappa;
    } else {
      st.kappa = 1.0;
      st.kappa_degenerate = true;
    }
  }
  return st;
}

std::string export_labels(const AnnotationSession& s) {
  std::string out;
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    const auto& t = s.tasks[i];
    for (const auto& a : s.annotators) {
      auto l = s.label_of(a, t.pair_id);
      if (!l) continue;
      out += dump_line({{"session_id", s.session_id},
                        {"index", i},
                        {"pair_id", t.pair_id},
                        {"category", hardneg::to_string(t.category)},
                        {"annotator", a},
                        {"label", to_string(*l)}});
      out += '\n';
    }
  }
  return out;
}

}  // namespace hardneg::review
