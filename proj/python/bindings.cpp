#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hardneg/categorize.hpp"
#include "hardneg/dpo.hpp"
#include "hardneg/metrics.hpp"
#include "hardneg/pipeline.hpp"
#include "hardneg/stats.hpp"

namespace py = pybind11;
using namespace hardneg;

namespace {

py::dict band_dict(const BandStats& b) {
  py::dict d;
  d["count"] = b.count;
  d["mean_ld"] = b.mean_ld();
  d["mean_abs_len_delta"] = b.mean_abs_len_delta();
  d["pct_chosen_longer"] = b.pct_chosen_longer();
  d["pct_rejected_longer"] = b.pct_rejected_longer();
  return d;
}

py::dict report_dict(const BiasReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["overall"] = band_dict(r.overall);
  d["short"] = band_dict(r.short_band);
  d["long"] = band_dict(r.long_band);
  return d;
}

}  // namespace

PYBIND11_MODULE(_hardneg, m) {
  py::register_exception<Error>(m, "HardnegError", PyExc_RuntimeError);

  m.def("word_tokens", &word_tokens, py::arg("text"));
  m.def("word_levenshtein", py::overload_cast<std::string_view, std::string_view>(&word_levenshtein),
        py::arg("a"), py::arg("b"));
  m.def(
      "pair_stats",
      [](std::string_view chosen, std::string_view rejected) {
        const auto s = pair_stats(chosen, rejected);
        py::dict d;
        d["ld"] = s.ld;
        d["len_chosen"] = s.len_chosen;
        d["len_rejected"] = s.len_rejected;
        d["len_delta"] = s.len_delta;
        d["longer"] = s.longer == Longer::Chosen ? "chosen" : s.longer == Longer::Rejected ? "rejected" : "equal";
        return d;
      },
      py::arg("chosen"), py::arg("rejected"));
  m.def(
      "audit_file", [](const std::filesystem::path& p, const std::string& name) { return report_dict(audit_file(p, name)); },
      py::arg("path"), py::arg("name") = "dataset");

  m.def(
      "categorize",
      [](std::string_view instruction) {
        return std::string(to_string(assign_category(instruction, KeywordRuleset::defaults()).final_category));
      },
      py::arg("instruction"));

  m.def("dpo_loss", &dpo::dpo_loss, py::arg("delta_theta"), py::arg("delta_ref"), py::arg("alpha") = 0.1);
  m.def("neg_log_sigmoid", &dpo::neg_log_sigmoid, py::arg("x"));

  m.def(
      "fleiss_kappa",
      [](const stats::AgreementTable& t) -> std::optional<double> { return stats::fleiss_kappa(t).kappa; },
      py::arg("table"));
  m.def(
      "bootstrap_win_rate",
      [](const std::vector<double>& a, const std::vector<double>& b, std::size_t iterations, double fraction,
         std::uint64_t seed) {
        stats::BootstrapOptions opt;
        opt.iterations = iterations;
        opt.fraction = fraction;
        opt.seed = seed;
        return stats::bootstrap_compare(a, b, opt).win_rate;
      },
      py::arg("a"), py::arg("b"), py::arg("iterations") = 1000, py::arg("fraction") = 0.5, py::arg("seed") = 0);
}
