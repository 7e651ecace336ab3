#include "hardneg/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "hardneg/text.hpp"

namespace hardneg {

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto tok : text::split_ws(s)) {
    auto core = text::strip_punct(tok);
    if (!core.empty()) out.push_back(text::to_lower(core));
  }
  return out;
}

std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& longer = a.size() >= b.size() ? a : b;
  const auto& shorter = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> row(shorter.size() + 1);
  for (std::size_t j = 0; j <= shorter.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= longer.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (longer[i - 1] == shorter[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[shorter.size()];
}

std::size_t word_levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(word_tokens(a), word_tokens(b));
}

PairStats pair_stats(std::string_view chosen, std::string_view rejected) {
  const auto c = word_tokens(chosen);
  const auto r = word_tokens(rejected);
  PairStats s;
  s.ld = levenshtein(c, r);
  s.len_chosen = c.size();
  s.len_rejected = r.size();
  s.len_delta = static_cast<std::int64_t>(r.size()) - static_cast<std::int64_t>(c.size());
  s.longer = s.len_delta < 0 ? Longer::Chosen : s.len_delta > 0 ? Longer::Rejected : Longer::Equal;
  s.bucket = s.len_chosen <= kShortMaxTokens ? Bucket::Short : Bucket::Long;
  return s;
}

void BandStats::add(const PairStats& s) {
  ++count;
  sum_ld += s.ld;
  const auto mag = static_cast<std::size_t>(s.len_delta < 0 ? -s.len_delta : s.len_delta);
  sum_abs_delta += mag;
  if (s.longer == Longer::Chosen) {
    ++chosen_longer;
    sum_delta_chosen_longer += mag;
  } else if (s.longer == Longer::Rejected) {
    ++rejected_longer;
    sum_delta_rejected_longer += mag;
  }
}

void BandStats::merge(const BandStats& o) {
  count += o.count;
  chosen_longer += o.chosen_longer;
  rejected_longer += o.rejected_longer;
  sum_ld += o.sum_ld;
  sum_abs_delta += o.sum_abs_delta;
  sum_delta_chosen_longer += o.sum_delta_chosen_longer;
  sum_delta_rejected_longer += o.sum_delta_rejected_longer;
}

namespace {
std::optional<double> ratio(std::size_t num, std::size_t den, double scale = 1.0) {
  if (den == 0) return std::nullopt;
  return scale * static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

std::optional<double> BandStats::pct_chosen_longer() const { return ratio(chosen_longer, count, 100.0); }
std::optional<double> BandStats::pct_rejected_longer() const { return ratio(rejected_longer, count, 100.0); }
std::optional<double> BandStats::mean_ld() const { return ratio(sum_ld, count); }
std::optional<double> BandStats::mean_abs_len_delta() const { return ratio(sum_abs_delta, count); }
std::optional<double> BandStats::mean_delta_when_chosen_longer() const {
  return ratio(sum_delta_chosen_longer, chosen_longer);
}
std::optional<double> BandStats::mean_delta_when_rejected_longer() const {
  return ratio(sum_delta_rejected_longer, rejected_longer);
}

void BiasReport::add(const PairStats& s) {
  overall.add(s);
  (s.bucket == Bucket::Short ? short_band : long_band).add(s);
}

BiasReport dataset_report(const std::vector<PreferencePair>& pairs, std::string name) {
  if (pairs.empty()) throw Error(Errc::EmptyDataset, "no pairs to audit");
  BiasReport r;
  r.name = std::move(name);
  for (const auto& p : pairs) r.add(pair_stats(p));
  return r;
}

namespace {

json opt(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json band_json(const BandStats& b) {
  return {
      {"count", b.count},
      {"chosen_longer", b.chosen_longer},
      {"rejected_longer", b.rejected_longer},
      {"sum_ld", b.sum_ld},
      {"sum_abs_len_delta", b.sum_abs_delta},
      {"sum_delta_chosen_longer", b.sum_delta_chosen_longer},
      {"sum_delta_rejected_longer", b.sum_delta_rejected_longer},
      {"pct_chosen_longer", opt(b.pct_chosen_longer())},
      {"pct_rejected_longer", opt(b.pct_rejected_longer())},
      {"mean_ld", opt(b.mean_ld())},
      {"mean_abs_len_delta", opt(b.mean_abs_len_delta())},
      {"mean_delta_when_chosen_longer", opt(b.mean_delta_when_chosen_longer())},
      {"mean_delta_when_rejected_longer", opt(b.mean_delta_when_rejected_longer())},
  };
}

BandStats band_from_json(const json& j) {
  BandStats b;
  b.count = j.at("count").get<std::size_t>();
  b.chosen_longer = j.at("chosen_longer").get<std::size_t>();
  b.rejected_longer = j.at("rejected_longer").get<std::size_t>();
  b.sum_ld = j.at("sum_ld").get<std::size_t>();
  b.sum_abs_delta = j.at("sum_abs_len_delta").get<std::size_t>();
  b.sum_delta_chosen_longer = j.at("sum_delta_chosen_longer").get<std::size_t>();
  b.sum_delta_rejected_longer = j.at("sum_delta_rejected_longer").get<std::size_t>();
  return b;
}

std::string cell_int(std::optional<double> v) { return v ? std::to_string(round_display(*v)) : "-"; }

std::string cell_pair(std::optional<double> a, std::optional<double> b) {
  if (!a && !b) return "-";
  return "(" + cell_int(a) + ", " + cell_int(b) + ")";
}

struct Row {
  std::string label;
  std::vector<std::string> cells;
};

void band_rows(std::vector<Row>& rows, const std::string& title, const std::vector<const BandStats*>& bands) {
  Row head{title, {}}, ld{"- Linguistic Similarity", {}}, avg{"- Avg. Token Length Difference", {}},
      split{"- Token Length Difference", {}};
  for (const auto* b : bands) {
    const bool none = b->count == 0;
    head.cells.push_back(none ? "-" : cell_pair(b->pct_chosen_longer(), b->pct_rejected_longer()));
    ld.cells.push_back(cell_int(b->mean_ld()));
    avg.cells.push_back(cell_int(b->mean_abs_len_delta()));
    split.cells.push_back(none ? "-" : cell_pair(b->mean_delta_when_chosen_longer(), b->mean_delta_when_rejected_longer()));
  }
  rows.push_back(std::move(head));
  rows.push_back(std::move(ld));
  rows.push_back(std::move(avg));
  rows.push_back(std::move(split));
}

std::string render(const std::vector<std::string>& header, const std::vector<Row>& rows) {
  std::size_t label_w = 0;
  std::vector<std::size_t> w(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) w[c] = header[c].size();
  for (const auto& r : rows) {
    label_w = std::max(label_w, r.label.size());
    for (std::size_t c = 0; c < r.cells.size(); ++c) w[c] = std::max(w[c], r.cells[c].size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_w)) << "";
  for (std::size_t c = 0; c < header.size(); ++c) out << "  " << std::setw(static_cast<int>(w[c])) << header[c];
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && i % 4 == 0) out << '\n';
    out << std::setw(static_cast<int>(label_w)) << rows[i].label;
    for (std::size_t c = 0; c < rows[i].cells.size(); ++c)
      out << "  " << std::setw(static_cast<int>(w[c])) << rows[i].cells[c];
    out << '\n';
  }
  return out.str();
}

std::string table_text(const std::vector<BiasReport>& reports, std::optional<std::size_t> flag) {
  std::vector<std::string> header;
  std::vector<const BandStats*> overall, shorts, longs;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    header.push_back(reports[i].name + (flag && *flag == i ? " *" : ""));
    overall.push_back(&reports[i].overall);
    shorts.push_back(&reports[i].short_band);
    longs.push_back(&reports[i].long_band);
  }
  std::vector<Row> rows;
  band_rows(rows, "Overall Samples (%)", overall);
  band_rows(rows, "Short Response Samples (%)", shorts);
  band_rows(rows, "Long Response Samples (%)", longs);
  auto out = render(header, rows);
  if (flag) out += "* lowest mean word-level Levenshtein distance\n";
  return out;
}

}  // namespace

long long round_display(double v) { return static_cast<long long>(std::round(v)); }

json to_json(const BiasReport& r) {
  return {{"name", r.name},
          {"short_max_tokens", kShortMaxTokens},
          {"overall", band_json(r.overall)},
          {"short", band_json(r.short_band)},
          {"long", band_json(r.long_band)}};
}

BiasReport bias_report_from_json(const json& j) {
  try {
    BiasReport r;
    r.name = j.at("name").get<std::string>();
    r.overall = band_from_json(j.at("overall"));
    r.short_band = band_from_json(j.at("short"));
    r.long_band = band_from_json(j.at("long"));
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedLine, std::string("bias report: ") + e.what());
  }
}

ComparisonTable compare_reports(std::vector<BiasReport> reports) {
  if (reports.size() < 2) throw Error(Errc::Usage, "comparison needs at least two reports");
  ComparisonTable t;
  t.reports = std::move(reports);
  std::optional<double> best;
  for (std::size_t i = 0; i < t.reports.size(); ++i) {
    auto m = t.reports[i].overall.mean_ld();
    if (m && (!best || *m < *best)) {
      best = m;
      t.lowest_ld = i;
    }
  }
  return t;
}

std::string ComparisonTable::to_text() const { return table_text(reports, lowest_ld); }

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "dataset,band,count,pct_chosen_longer,pct_rejected_longer,mean_ld,mean_abs_len_delta,"
         "mean_delta_when_chosen_longer,mean_delta_when_rejected_longer,lowest_ld\n";
  auto num = [&](std::optional<double> v) {
    if (v) out << *v;
  };
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::pair<const char*, const BandStats*> bands[] = {
        {"overall", &reports[i].overall}, {"short", &reports[i].short_band}, {"long", &reports[i].long_band}};
    for (const auto& [name, b] : bands) {
      out << reports[i].name << ',' << name << ',' << b->count << ',';
      num(b->pct_chosen_longer());
      out << ',';
      num(b->pct_rejected_longer());
      out << ',';
      num(b->mean_ld());
      out << ',';
      num(b->mean_abs_len_delta());
      out << ',';
      num(b->mean_delta_when_chosen_longer());
      out << ',';
      num(b->mean_delta_when_rejected_longer());
      out << ',' << (i == lowest_ld ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string format_report(const BiasReport& r) { return table_text({r}, std::nullopt); }

}  // namespace hardneg
