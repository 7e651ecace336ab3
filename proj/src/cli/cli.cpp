#include "hardneg/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "hardneg/dpo.hpp"
#include "hardneg/pipeline.hpp"
#include "hardneg/review/server.hpp"
#include "hardneg/stats.hpp"

namespace hardneg::cli {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Usage:
    case Errc::Config: return kUsage;
    case Errc::Backend: return kBackend;
    default: return kData;
  }
}

namespace {

const std::set<std::string> kConfigKeys = {
    "seed",  "budget", "k",          "cadence",    "max_passes", "checkpoint_every", "backend", "keywords",
    "weights", "workers", "data_dir", "iterations", "fraction",  "with_replacement", "alpha",   "lr",
    "steps", "out_dir", "n",          "annotators", "port",       "images"};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::Config, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(Errc::Config, path + ": config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kConfigKeys.count(k)) throw Error(Errc::Config, path + ": unknown key \"" + k + "\"");
  return j;
}

// Config values fill in options not given on the command line.
template <class T>
void fill(const CLI::Option* opt, T& var, const json& cfg, const char* key) {
  if (opt->count() > 0 || !cfg.contains(key)) return;
  try {
    var = cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::Config, std::string("config key \"") + key + "\" has the wrong type");
  }
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}
  void operator()(std::string_view level, std::string_view event, json fields = json::object()) const {
    fields["level"] = level;
    fields["event"] = event;
    err_ << dump_line(fields) << '\n';
  }

 private:
  std::ostream& err_;
};

KeywordRuleset rules_from(const std::string& keywords_path, const json& cfg) {
  if (!keywords_path.empty()) {
    try {
      return KeywordRuleset::with_overrides(json::parse(read_file(keywords_path)));
    } catch (const json::parse_error& e) {
      throw Error(Errc::Config, keywords_path + ": " + e.what());
    }
  }
  if (cfg.contains("keywords")) {
    const auto& k = cfg.at("keywords");
    if (k.is_string()) return rules_from(k.get<std::string>(), json::object());
    return KeywordRuleset::with_overrides(k);
  }
  return KeywordRuleset::defaults();
}

CategoryWeights weights_from(const json& cfg) {
  CategoryWeights w = kUniformWeights;
  if (!cfg.contains("weights")) return w;
  const auto& j = cfg.at("weights");
  if (!j.is_object()) throw Error(Errc::Config, "weights must map category names to numbers");
  for (const auto& [name, v] : j.items()) {
    auto c = parse_category(name);
    if (!c) throw Error(Errc::Config, "weights: unknown category \"" + name + "\"");
    if (!v.is_number() || v.get<double>() < 0) throw Error(Errc::Config, "weights: \"" + name + "\" must be >= 0");
    w[static_cast<std::size_t>(*c)] = v.get<double>();
  }
  return w;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(prec) << v;
  return o.str();
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::Io, "cannot write " + p.string());
  f << s;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Log log(err);
  CLI::App app{"hard-negative preference data toolkit", "hardneg"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool as_json = false;
  int workers = 1;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config; unknown keys are rejected");
  app.add_flag("--json", as_json, "machine-readable output");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads for data-parallel stages")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "global seed");

  // filter
  auto* filter = app.add_subcommand("filter", "drop samples unsuited to hard-negative editing");
  std::string f_in, f_out;
  filter->add_option("--in", f_in)->required();
  filter->add_option("--out", f_out)->required();

  // categorize
  auto* categorize = app.add_subcommand("categorize", "assign task categories, balance, subsample");
  std::string c_in, c_out, c_keywords;
  std::size_t c_budget = 0;
  categorize->add_option("--in", c_in)->required();
  categorize->add_option("--out", c_out)->required();
  auto* c_budget_opt = categorize->add_option("--budget", c_budget);
  categorize->add_option("--keywords", c_keywords, "JSON keyword overrides");

  // generate
  auto* generate = app.add_subcommand("generate", "edit responses into hard negatives");
  std::string g_in, g_out, g_failed, g_backend, g_audit, g_checkpoint;
  std::size_t g_k = 10, g_cadence = 10, g_ckpt_every = 50;
  int g_passes = 3;
  bool g_resume = false;
  generate->add_option("--in", g_in)->required();
  generate->add_option("--out", g_out)->required();
  generate->add_option("--failed", g_failed)->required();
  auto* g_backend_opt = generate->add_option("--backend", g_backend, "backend config JSON");
  auto* g_k_opt = generate->add_option("--k", g_k, "penalty list size")->check(CLI::PositiveNumber);
  auto* g_cad_opt = generate->add_option("--cadence", g_cadence, "penalty refresh cadence")->check(CLI::PositiveNumber);
  auto* g_pass_opt = generate->add_option("--max-passes", g_passes)->check(CLI::PositiveNumber);
  generate->add_option("--audit", g_audit, "audit log JSONL");
  generate->add_option("--checkpoint", g_checkpoint);
  auto* g_ckpt_opt = generate->add_option("--checkpoint-every", g_ckpt_every);
  generate->add_flag("--resume", g_resume);

  // audit
  auto* audit = app.add_subcommand("audit", "length and edit-distance bias report");
  std::string a_in, a_report, a_csv, a_name;
  audit->add_option("--in", a_in)->required();
  audit->add_option("--report", a_report);
  audit->add_option("--csv", a_csv);
  audit->add_option("--name", a_name);

  auto* audit_cmp = app.add_subcommand("audit-compare", "side-by-side bias reports");
  std::vector<std::string> ac_files;
  std::string ac_csv;
  audit_cmp->add_option("reports", ac_files)->required();
  audit_cmp->add_option("--csv", ac_csv);

  // dpo
  auto* dpo_sim = app.add_subcommand("dpo-sim", "train a unigram policy on a synthetic preference set");
  std::string d_kind = "length_biased", d_trace;
  std::size_t d_n = 500, d_batch = 0;
  int d_steps = 300;
  double d_alpha = 0.1, d_lr = 0.05;
  dpo_sim->add_option("--kind", d_kind)->check(CLI::IsMember({"length_biased", "hard_negative", "duplicate"}));
  auto* d_n_opt = dpo_sim->add_option("--n", d_n);
  auto* d_steps_opt = dpo_sim->add_option("--steps", d_steps);
  auto* d_alpha_opt = dpo_sim->add_option("--alpha", d_alpha);
  auto* d_lr_opt = dpo_sim->add_option("--lr", d_lr);
  dpo_sim->add_option("--batch", d_batch, "0 = full batch");
  dpo_sim->add_option("--trace", d_trace);

  auto* dpo_diag = app.add_subcommand("dpo-diagnose", "per-step summaries of logged log-probabilities");
  std::string dd_in, dd_out;
  double dd_alpha = 0.1;
  dpo_diag->add_option("--in", dd_in)->required();
  dpo_diag->add_option("--out", dd_out);
  auto* dd_alpha_opt = dpo_diag->add_option("--alpha", dd_alpha);

  // stats
  auto* signif = app.add_subcommand("significance", "paired resampling win rate of a over b");
  std::string s_a, s_b;
  std::size_t s_iters = 1000;
  double s_frac = 0.5;
  bool s_repl = false;
  signif->add_option("--a", s_a)->required();
  signif->add_option("--b", s_b)->required();
  auto* s_iters_opt = signif->add_option("--iters", s_iters);
  auto* s_frac_opt = signif->add_option("--frac", s_frac);
  auto* s_repl_opt = signif->add_flag("--with-replacement", s_repl);

  auto* kappa = app.add_subcommand("kappa", "Fleiss' kappa of an items x categories count table");
  std::string k_in;
  kappa->add_option("--in", k_in)->required();

  auto* yesno = app.add_subcommand("yesno", "yes/no bias profile and grouped accuracy");
  std::string y_in;
  bool y_groups = false;
  yesno->add_option("--in", y_in)->required();
  yesno->add_flag("--groups", y_groups);

  // review
  auto* serve = app.add_subcommand("review-serve", "serve the annotation API");
  std::string r_pairs, r_annotators = "a,b,c", r_images, r_data, r_host = "127.0.0.1";
  std::size_t r_n = 500;
  int r_port = 8080;
  serve->add_option("--pairs", r_pairs)->required();
  auto* r_n_opt = serve->add_option("--n", r_n);
  auto* r_ann_opt = serve->add_option("--annotators", r_annotators);
  auto* r_port_opt = serve->add_option("--port", r_port);
  auto* r_img_opt = serve->add_option("--images", r_images);
  auto* r_data_opt = serve->add_option("--data-dir", r_data);
  serve->add_option("--host", r_host);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "filter, categorize, generate and audit in one run");
  std::string p_in, p_backend, p_out = "pipeline_out", p_keywords;
  std::size_t p_budget = 0, p_k = 10, p_cadence = 10;
  int p_passes = 3;
  pipeline->add_option("--in", p_in)->required();
  auto* p_backend_opt = pipeline->add_option("--backend", p_backend);
  auto* p_out_opt = pipeline->add_option("--out-dir", p_out);
  auto* p_budget_opt = pipeline->add_option("--budget", p_budget);
  pipeline->add_option("--keywords", p_keywords);
  auto* p_k_opt = pipeline->add_option("--k", p_k)->check(CLI::PositiveNumber);
  auto* p_cad_opt = pipeline->add_option("--cadence", p_cadence)->check(CLI::PositiveNumber);
  auto* p_pass_opt = pipeline->add_option("--max-passes", p_passes)->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    const json cfg = load_config(config_path);
    fill(seed_opt, seed, cfg, "seed");
    fill(workers_opt, workers, cfg, "workers");
    if (workers > 1) log("info", "workers", {{"requested", workers}, {"note", "stages run sequentially"}});

    auto emit = [&](const json& j, const std::string& human) {
      if (as_json)
        out << j.dump(2) << '\n';
      else
        out << human;
    };

    if (filter->parsed()) {
      const auto s = filter_file(f_in, f_out);
      log("info", "filter", s.to_json());
      std::ostringstream h;
      h << "kept " << s.kept << " of " << s.input << '\n';
      for (const auto& [r, n] : s.dropped) h << "  dropped " << r << ": " << n << '\n';
      emit(s.to_json(), h.str());
      return kOk;
    }

    if (categorize->parsed()) {
      CategorizeOptions o;
      o.seed = seed;
      fill(c_budget_opt, c_budget, cfg, "budget");
      if (c_budget_opt->count() > 0 || cfg.contains("budget")) o.budget = c_budget;
      o.rules = rules_from(c_keywords, cfg);
      o.weights = weights_from(cfg);
      const auto s = categorize_file(c_in, c_out, o);
      log("info", "categorize", s.to_json());
      std::ostringstream h;
      h << "tagged " << s.output << " of " << s.input << " (" << s.after_balance << " after existence balancing)\n";
      for (const auto& [c, n] : s.by_category) h << "  " << c << ": " << n << '\n';
      emit(s.to_json(), h.str());
      return kOk;
    }

    if (generate->parsed()) {
      fill(g_backend_opt, g_backend, cfg, "backend");
      fill(g_k_opt, g_k, cfg, "k");
      fill(g_cad_opt, g_cadence, cfg, "cadence");
      fill(g_pass_opt, g_passes, cfg, "max_passes");
      fill(g_ckpt_opt, g_ckpt_every, cfg, "checkpoint_every");
      const BackendConfig bc = g_backend.empty() ? BackendConfig{} : BackendConfig::load(g_backend);
      auto backend = make_backend(bc);
      GenerateOptions o;
      o.seed = seed;
      o.k = g_k;
      o.cadence = g_cadence;
      o.max_passes = g_passes;
      o.checkpoint_every = g_ckpt_every;
      o.resume = g_resume;
      const auto r = generate_file(g_in, {g_out, g_failed, g_audit, g_checkpoint}, *backend, o);
      const auto j = r.to_json();
      log("info", "generate", {{"accepted", r.accepted}, {"failed", r.failed}, {"passes", r.passes}});
      std::ostringstream h;
      h << "accepted " << r.accepted << " of " << r.input << ", failed " << r.failed << ", passes " << r.passes
        << ", completions " << r.completions << '\n';
      for (const auto& [reason, n] : r.failure_reasons) h << "  " << reason << ": " << n << '\n';
      emit(j, h.str());
      auto backend_fail = r.failure_reasons.find("BackendError");
      if (backend_fail != r.failure_reasons.end() && backend_fail->second > 0) {
        log("error", "backend_failures", {{"count", backend_fail->second}});
        return kBackend;
      }
      return kOk;
    }

    if (audit->parsed()) {
      const auto r = audit_file(a_in, a_name.empty() ? std::filesystem::path(a_in).stem().string() : a_name);
      if (!a_report.empty()) atomic_write(a_report, to_json(r).dump(2) + "\n");
      if (!a_csv.empty()) {
        ComparisonTable t;
        t.reports = {r};
        write_text(a_csv, t.to_csv());
      }
      emit(to_json(r), r.empty() ? "no data\n" : format_report(r));
      return kOk;
    }

    if (audit_cmp->parsed()) {
      std::vector<BiasReport> reports;
      for (const auto& f : ac_files) {
        json j;
        try {
          j = json::parse(read_file(f));
        } catch (const json::parse_error& e) {
          throw Error(Errc::MalformedLine, f + ": " + e.what());
        }
        reports.push_back(bias_report_from_json(j));
      }
      const auto t = compare_reports(std::move(reports));
      if (!ac_csv.empty()) write_text(ac_csv, t.to_csv());
      json j = json::array();
      for (const auto& r : t.reports) j.push_back(to_json(r));
      emit({{"reports", j}, {"lowest_ld", t.reports[t.lowest_ld].name}}, t.to_text());
      return kOk;
    }

    if (dpo_sim->parsed()) {
      fill(d_n_opt, d_n, cfg, "n");
      fill(d_steps_opt, d_steps, cfg, "steps");
      fill(d_alpha_opt, d_alpha, cfg, "alpha");
      fill(d_lr_opt, d_lr, cfg, "lr");
      dpo::SynthConfig sc;
      sc.kind = *dpo::parse_synth_kind(d_kind);
      sc.n = d_n;
      sc.seed = seed;
      const auto set = dpo::synth_pairs(sc);
      dpo::DpoConfig dc;
      dc.alpha = d_alpha;
      dc.learning_rate = d_lr;
      dc.steps = d_steps;
      dc.batch_size = d_batch;
      dc.seed = seed;
      const auto trace = dpo::train(dpo::PolicyParams::uniform(set.vocab), set.pairs, dc);
      if (!d_trace.empty()) write_text(d_trace, trace.to_csv());

      std::optional<int> first_full;
      for (const auto& row : trace.rows)
        if (row.reward_acc == 1.0 && !first_full) first_full = row.step;
      const auto reference = dpo::PolicyParams::uniform(set.vocab);
      const auto compiled = dpo::compile(reference, set.pairs);
      double dup_dref = 0;
      std::size_t dups = 0;
      for (std::size_t i = 0; i < compiled.size(); ++i)
        if (set.duplicate[i]) {
          dup_dref += compiled[i].delta_ref;
          ++dups;
        }
      const auto& last = trace.rows.back();
      json j = {{"kind", d_kind},
                {"n", d_n},
                {"steps", d_steps},
                {"final_loss", last.loss},
                {"final_reward_acc", last.reward_acc},
                {"first_full_accuracy_step", first_full ? json(*first_full) : json(nullptr)},
                {"duplicate_pairs", dups},
                {"mean_delta_ref_duplicates", dups ? json(dup_dref / static_cast<double>(dups)) : json(nullptr)}};
      std::ostringstream h;
      h << d_kind << ": final loss " << fmt(last.loss) << ", reward accuracy " << fmt(last.reward_acc)
        << ", mean delta_ref " << fmt(last.mean_delta_ref) << '\n';
      if (first_full) h << "  reward accuracy first reached 1.0 at step " << *first_full << '\n';
      if (dups) h << "  duplicate pairs: " << dups << ", mean delta_ref over them " << fmt(dup_dref / dups) << '\n';
      emit(j, h.str());
      return kOk;
    }

    if (dpo_diag->parsed()) {
      fill(dd_alpha_opt, dd_alpha, cfg, "alpha");
      const auto series = dpo::diagnose_traces(load_logprob_records(dd_in), dd_alpha);
      const auto csv = dpo::to_csv(series);
      if (!dd_out.empty()) write_text(dd_out, csv);
      json j = json::array();
      for (const auto& s : series)
        j.push_back({{"step", s.step},
                     {"count", s.count},
                     {"mean_delta_theta", s.mean_delta_theta},
                     {"mean_delta_ref", s.mean_delta_ref},
                     {"mean_lp_ref_chosen", s.mean_lp_ref_chosen},
                     {"mean_lp_ref_rejected", s.mean_lp_ref_rejected},
                     {"reward_acc", s.reward_acc},
                     {"mean_loss", s.mean_loss}});
      emit(j, series.empty() ? "no data\n" : csv);
      return kOk;
    }

    if (signif->parsed()) {
      fill(s_iters_opt, s_iters, cfg, "iterations");
      fill(s_frac_opt, s_frac, cfg, "fraction");
      fill(s_repl_opt, s_repl, cfg, "with_replacement");
      stats::BootstrapOptions o;
      o.iterations = s_iters;
      o.fraction = s_frac;
      o.seed = seed;
      o.with_replacement = s_repl;
      const auto r = stats::bootstrap_compare(stats::load_scores(s_a), stats::load_scores(s_b), o);
      std::ostringstream h;
      h << "win rate " << fmt(r.win_rate) << " (" << r.wins << "/" << r.iterations << ", " << r.sample_size
        << " items per draw" << (r.with_replacement ? ", with replacement" : "") << ") "
        << (r.significant ? "significant" : "not significant") << '\n';
      emit(r.to_json(), h.str());
      return kOk;
    }

    if (kappa->parsed()) {
      const auto r = stats::fleiss_kappa(stats::load_agreement_table(k_in));
      std::ostringstream h;
      if (r.kappa)
        h << "kappa " << fmt(*r.kappa, 6) << " over " << r.items << " items, " << r.raters << " raters\n";
      else
        h << "kappa undefined: every rating falls in one category\n";
      emit(r.to_json(), h.str());
      return kOk;
    }

    if (yesno->parsed()) {
      const auto preds = load_predictions(y_in);
      if (preds.empty()) {
        emit(json::object(), "no data\n");
        return kOk;
      }
      const auto p = stats::yes_no_profile(preds);
      json j = {{"profile", p.to_json()}};
      std::ostringstream h;
      h << "yes rate " << fmt(p.yes_rate()) << ", accuracy " << fmt(p.accuracy()) << '\n'
        << "  yes correct " << p.yes_correct << ", yes incorrect " << p.yes_incorrect << ", no correct " << p.no_correct
        << ", no incorrect " << p.no_incorrect << '\n';
      if (y_groups) {
        const auto g = stats::naturalbench_scores(preds);
        j["grouped"] = g.to_json();
        h << "overall " << fmt(g.overall_acc) << ", question " << fmt(g.question_acc) << ", image " << fmt(g.image_acc)
          << ", group " << fmt(g.group_acc) << " over " << g.groups << " groups\n";
      }
      emit(j, h.str());
      return kOk;
    }

    if (serve->parsed()) {
      fill(r_n_opt, r_n, cfg, "n");
      fill(r_ann_opt, r_annotators, cfg, "annotators");
      fill(r_port_opt, r_port, cfg, "port");
      fill(r_img_opt, r_images, cfg, "images");
      fill(r_data_opt, r_data, cfg, "data_dir");
      if (r_data.empty()) {
        const char* env = std::getenv("VAPR_DATA_DIR");
        r_data = env ? env : "review-data";
      }
      review::SessionStore store(r_data);
      const auto session = store.create(load_pairs(r_pairs), r_n, split_commas(r_annotators), seed, r_pairs);
      review::ServerOptions so;
      so.host = r_host;
      so.port = r_port;
      if (!r_images.empty()) so.images_root = r_images;

      // handle SIGINT/SIGTERM on this thread; server threads inherit the mask
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      review::ReviewServer server(store, so);
      const int port = server.start();
      log("info", "serving", {{"session_id", session->session_id}, {"port", port}, {"tasks", session->tasks.size()}});
      emit({{"session_id", session->session_id}, {"port", port}},
           "session " + session->session_id + " on http://" + r_host + ":" + std::to_string(port) + "\n");
      out.flush();
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
      log("info", "stopped", {{"signal", sig}});
      return kOk;
    }

    if (pipeline->parsed()) {
      PipelineOptions o;
      o.input = p_in;
      fill(p_out_opt, p_out, cfg, "out_dir");
      fill(p_backend_opt, p_backend, cfg, "backend");
      fill(p_budget_opt, p_budget, cfg, "budget");
      fill(p_k_opt, p_k, cfg, "k");
      fill(p_cad_opt, p_cadence, cfg, "cadence");
      fill(p_pass_opt, p_passes, cfg, "max_passes");
      o.out_dir = p_out;
      o.seed = seed;
      if (!p_backend.empty()) o.backend = BackendConfig::load(p_backend);
      if (p_budget_opt->count() > 0 || cfg.contains("budget")) o.budget = p_budget;
      o.rules = rules_from(p_keywords, cfg);
      o.weights = weights_from(cfg);
      o.k = p_k;
      o.cadence = p_cadence;
      o.max_passes = p_passes;
      const auto report = run_pipeline(o);
      log("info", "pipeline", {{"out_dir", p_out}, {"accepted", report["generate"]["accepted"]}});
      std::ostringstream h;
      h << "kept " << report["filter"]["kept"] << " of " << report["filter"]["input"] << ", tagged "
        << report["categorize"]["output"] << ", accepted " << report["generate"]["accepted"] << ", failed "
        << report["generate"]["failed"] << "\n\n";
      const auto bias = bias_report_from_json(report["audit"]);
      h << (bias.empty() ? "no data\n" : format_report(bias));
      emit(report, h.str());
      const auto& reasons = report["generate"]["failure_reasons"];
      if (reasons.contains("BackendError")) return kBackend;
      return kOk;
    }
  } catch (const Error& e) {
    json f = {{"code", errc_name(e.code())}, {"message", e.what()}};
    if (e.line()) f["line"] = *e.line();
    log("error", "failed", f);
    err << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    log("error", "failed", {{"code", "Io"}, {"message", e.what()}});
    return kData;
  }
  return kUsage;
}

}  // namespace hardneg::cli
