#include "hardneg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hardneg/corpus_impl.hpp"
#include "hardneg/rng.hpp"
#include "hardneg/text.hpp"

namespace hardneg::stats {

BootstrapResult bootstrap_compare(const std::vector<double>& a, const std::vector<double>& b,
                                  const BootstrapOptions& opt) {
  if (a.size() != b.size())
    throw Error(Errc::LengthMismatch,
                "score lists differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.size() < 2) throw Error(Errc::EmptyInput, "need at least 2 paired scores");
  if (opt.iterations == 0) throw Error(Errc::Config, "iterations must be positive");
  if (!(opt.fraction > 0) || opt.fraction > 1) throw Error(Errc::Config, "fraction must be in (0, 1]");

  const std::size_t n = a.size();
  const auto k = static_cast<std::size_t>(std::floor(opt.fraction * static_cast<double>(n)));
  if (k == 0) throw Error(Errc::EmptyInput, "fraction selects no items");

  BootstrapResult r;
  r.iterations = opt.iterations;
  r.sample_fraction = opt.fraction;
  r.sample_size = k;
  r.with_replacement = opt.with_replacement;
  r.seed = opt.seed;

  std::vector<std::size_t> idx(n);
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(it)));
    double sa = 0, sb = 0;
    if (opt.with_replacement) {
      for (std::size_t j = 0; j < k; ++j) {
        const auto i = rng.below(n);
        sa += a[i];
        sb += b[i];
      }
    } else {
      // partial Fisher-Yates: the first k slots become the sample
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      for (std::size_t j = 0; j < k; ++j) {
        const auto pick = j + rng.below(n - j);
        std::swap(idx[j], idx[pick]);
        sa += a[idx[j]];
        sb += b[idx[j]];
      }
    }
    if (sa > sb) ++r.wins;
  }
  r.win_rate = static_cast<double>(r.wins) / static_cast<double>(r.iterations);
  r.significant = r.win_rate >= opt.threshold;
  return r;
}

json BootstrapResult::to_json() const {
  return {{"win_rate", win_rate},
          {"wins", wins},
          {"iterations", iterations},
          {"sample_fraction", sample_fraction},
          {"sample_size", sample_size},
          {"with_replacement", with_replacement},
          {"significant", significant},
          {"seed", seed}};
}

namespace {
double score_from_json(const json& j) {
  const json& v = j.is_object() ? j.at("score") : j;
  if (!v.is_number()) throw Error(Errc::MalformedLine, "score is not a number");
  return v.get<double>();
}
}  // namespace

std::vector<double> load_scores(const std::filesystem::path& path) { return load_strict<double>(path, score_from_json); }

// ---------------------------------------------------------------------------

KappaResult fleiss_kappa(const AgreementTable& table) {
  if (table.empty()) throw Error(Errc::EmptyInput, "agreement table has no items");
  const std::size_t cats = table.front().size();
  if (cats < 1) throw Error(Errc::RaggedTable, "agreement table has no categories");
  std::int64_t raters = -1;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.size() != cats) throw Error(Errc::RaggedTable, "row " + std::to_string(i + 1) + " has a different width");
    std::int64_t s = 0;
    for (auto c : row) {
      if (c < 0) throw Error(Errc::RaggedTable, "negative count in row " + std::to_string(i + 1));
      s += c;
    }
    if (raters < 0) raters = s;
    if (s != raters)
      throw Error(Errc::RaggedTable, "row " + std::to_string(i + 1) + " sums to " + std::to_string(s) + ", expected " +
                                         std::to_string(raters));
  }
  if (raters < 2) throw Error(Errc::RaggedTable, "need at least 2 raters per item");

  const double N = static_cast<double>(table.size());
  const double n = static_cast<double>(raters);
  std::vector<double> col(cats, 0.0);
  double p_sum = 0;
  for (const auto& row : table) {
    double agree = 0;
    for (std::size_t j = 0; j < cats; ++j) {
      const double c = static_cast<double>(row[j]);
      agree += c * (c - 1);
      col[j] += c;
    }
    p_sum += agree / (n * (n - 1));
  }
  KappaResult r;
  r.items = table.size();
  r.raters = raters;
  r.p_bar = p_sum / N;
  for (double c : col) {
    const double pj = c / (N * n);
    r.p_e += pj * pj;
  }
  // p_e == 1 exactly iff one category holds every rating
  const bool degenerate = std::count_if(col.begin(), col.end(), [](double c) { return c > 0; }) == 1;
  if (!degenerate) r.kappa = (r.p_bar - r.p_e) / (1.0 - r.p_e);
  return r;
}

json KappaResult::to_json() const {
  return {{"kappa", kappa ? json(*kappa) : json(nullptr)},
          {"undefined", !kappa.has_value()},
          {"p_bar", p_bar},
          {"p_e", p_e},
          {"items", items},
          {"raters", raters}};
}

AgreementTable load_agreement_table(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  AgreementTable t;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    std::vector<std::int64_t> row;
    bool numeric = true;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto c = std::string(text::trim(cell));
      std::size_t used = 0;
      try {
        row.push_back(std::stoll(c, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
      if (used != c.size()) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (t.empty() && no == 1) continue;  // header
      throw Error(Errc::MalformedLine, "non-integer cell", no);
    }
    t.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------

double YesNoProfile::yes_rate() const {
  return static_cast<double>(yes_correct + yes_incorrect) / static_cast<double>(total());
}

double YesNoProfile::accuracy() const {
  return static_cast<double>(yes_correct + no_correct) / static_cast<double>(total());
}

json YesNoProfile::to_json() const {
  return {{"yes_correct", yes_correct}, {"yes_incorrect", yes_incorrect}, {"no_correct", no_correct},
          {"no_incorrect", no_incorrect}, {"total", total()},            {"yes_rate", yes_rate()},
          {"accuracy", accuracy()}};
}

YesNoProfile yes_no_profile(const std::vector<PredictionRecord>& predictions) {
  if (predictions.empty()) throw Error(Errc::EmptyInput, "no predictions");
  YesNoProfile p;
  for (const auto& r : predictions) {
    const bool right = r.predicted == r.gold;
    if (r.predicted == YesNo::Yes)
      ++(right ? p.yes_correct : p.yes_incorrect);
    else
      ++(right ? p.no_correct : p.no_incorrect);
  }
  return p;
}

// ---------------------------------------------------------------------------

json GroupedScores::to_json() const {
  return {{"overall_acc", overall_acc},
          {"question_acc", question_acc},
          {"image_acc", image_acc},
          {"group_acc", group_acc},
          {"groups", groups}};
}

GroupedScores naturalbench_scores(const std::vector<PredictionRecord>& predictions) {
  if (predictions.empty()) throw Error(Errc::EmptyInput, "no predictions");
  std::map<std::string, std::vector<const PredictionRecord*>> groups;
  for (const auto& r : predictions) {
    if (!r.group_id) throw Error(Errc::MalformedGroup, "record " + r.question_id + "/" + r.image_id + " has no group");
    groups[*r.group_id].push_back(&r);
  }
  GroupedScores s;
  std::size_t correct = 0, q_hits = 0, i_hits = 0, g_hits = 0;
  for (const auto& [gid, recs] : groups) {
    std::set<std::string> qs, is;
    std::map<std::pair<std::string, std::string>, bool> cell;
    for (const auto* r : recs) {
      qs.insert(r->question_id);
      is.insert(r->image_id);
      cell[{r->question_id, r->image_id}] = r->predicted == r->gold;
    }
    if (recs.size() != 4 || qs.size() != 2 || is.size() != 2 || cell.size() != 4)
      throw Error(Errc::MalformedGroup, "group " + gid + " is not 2 questions x 2 images");
    for (const auto& [k, ok] : cell) correct += ok;
    for (const auto& q : qs) {
      bool all = true;
      for (const auto& i : is) all = all && cell[{q, i}];
      q_hits += all;
    }
    for (const auto& i : is) {
      bool all = true;
      for (const auto& q : qs) all = all && cell[{q, i}];
      i_hits += all;
    }
    g_hits += std::all_of(cell.begin(), cell.end(), [](const auto& kv) { return kv.second; });
  }
  const double g = static_cast<double>(groups.size());
  s.groups = groups.size();
  s.overall_acc = static_cast<double>(correct) / (4 * g);
  s.question_acc = static_cast<double>(q_hits) / (2 * g);
  s.image_acc = static_cast<double>(i_hits) / (2 * g);
  s.group_acc = static_cast<double>(g_hits) / g;
  return s;
}

}  // namespace hardneg::stats
