// refchoice: stated-preference experiment design, forward simulation,
// composite-likelihood estimation and willingness-to-pay reporting for the
// two-alternative vehicle choice model with latent attitudes.
//
// Exit codes: 0 success, 1 validation/usage error, 2 non-converged fit.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "refchoice/dataset_io.hpp"
#include "refchoice/design.hpp"
#include "refchoice/estimator.hpp"
#include "refchoice/manifest.hpp"
#include "refchoice/presets.hpp"
#include "refchoice/simulate.hpp"
#include "refchoice/wtp.hpp"

namespace fs = std::filesystem;
using namespace refchoice;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  int threads = default_threads();
  std::string out_dir = ".";
};

std::string resolve_out(const GlobalOpts& g, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / p).string();
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

ModelSpec load_spec(const std::string& path) {
  return spec_from_json(load_json(path));
}

// A fit file carries the parameters under "params"; a bare parameter map is
// accepted too.
ParamValues load_params(const ParamTable& table, const std::string& path) {
  const json j = load_json(path);
  if (j.contains("params")) return table.from_json(j.at("params"));
  return table.from_json(j);
}

void finish_manifest(RunManifest& m, const GlobalOpts& g,
                     std::chrono::steady_clock::time_point t0) {
  m.seed = g.seed;
  m.threads = g.threads;
  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  m.write(resolve_out(g, "manifest.json"));
}

int cmd_design(const GlobalOpts& g, const std::string& spec_path,
               int n_respondents, const std::string& out,
               const std::string& out_bank,
               const std::string& respondents_path) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.subcommand = "design";

  DesignSpec design;
  if (!spec_path.empty()) {
    design = load_json(spec_path).get<DesignSpec>();
    manifest.add_input(spec_path);
  }
  design.validate();

  Dataset frame;
  if (!respondents_path.empty()) {
    // reported prices come from an existing respondents file
    manifest.add_input(respondents_path);
    CsvTable rt = CsvTable::from_file(respondents_path);
    rt.require_columns({"respondent_id", "reported_icev_price_lacs"});
    for (std::size_t i = 0; i < rt.size(); ++i) {
      Respondent r;
      r.respondent_id = rt.integer(i, "respondent_id");
      r.reported_icev_price_lacs = rt.num(i, "reported_icev_price_lacs");
      frame.respondents.push_back(std::move(r));
    }
  } else {
    for (int i = 0; i < n_respondents; ++i) {
      Respondent r;
      r.respondent_id = i + 1;
      auto rng = substream(g.seed, detail::kTagPrice,
                           static_cast<std::uint64_t>(r.respondent_id));
      r.reported_icev_price_lacs = uniform_real(rng, 5.0, 20.0);
      frame.respondents.push_back(std::move(r));
    }
  }

  const auto bank = generate_bank(design, g.seed);
  for (auto& r : frame.respondents)
    r.tasks = assign_tasks(bank, design, r, g.seed);

  const std::string out_path = resolve_out(g, out);
  write_text(out_path, tasks_csv(frame));
  manifest.outputs.push_back(out_path);
  if (!out_bank.empty()) {
    const std::string bank_path = resolve_out(g, out_bank);
    write_text(bank_path, bank_csv(bank));
    manifest.outputs.push_back(bank_path);
  }
  manifest.options = {{"spec", spec_path},
                      {"n_respondents", n_respondents},
                      {"respondents", respondents_path},
                      {"out", out},
                      {"out_bank", out_bank}};
  finish_manifest(manifest, g, t0);
  std::fprintf(stderr, "design: wrote %zu tasks for %zu respondents\n",
               frame.respondents.size() * design.tasks_per_respondent,
               frame.respondents.size());
  return 0;
}

int cmd_simulate(const GlobalOpts& g, const std::string& spec_path,
                 const std::string& params_path, int n,
                 const std::string& out_respondents,
                 const std::string& out_tasks) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.subcommand = "simulate";
  manifest.add_input(spec_path);
  manifest.add_input(params_path);

  const ModelSpec spec = load_spec(spec_path);
  ParamTable table(spec);
  const ParamValues truth = load_params(table, params_path);

  SimConfig cfg = SimConfig::defaults();
  cfg.n_respondents = n;
  cfg.seed = g.seed;
  const Dataset ds = simulate_dataset(cfg, spec, table, truth);

  const std::string rp = resolve_out(g, out_respondents);
  const std::string tp = resolve_out(g, out_tasks);
  write_dataset(ds, rp, tp);
  manifest.outputs = {rp, tp};
  manifest.options = {{"spec", spec_path},
                      {"params", params_path},
                      {"n", n},
                      {"out_respondents", out_respondents},
                      {"out_tasks", out_tasks}};
  finish_manifest(manifest, g, t0);
  std::fprintf(stderr, "simulate: %d respondents from %s\n", n,
               spec.name.c_str());
  return 0;
}

int cmd_estimate(const GlobalOpts& g, const std::string& spec_path,
                 const std::string& respondents, const std::string& tasks,
                 const std::string& out, const std::string& start_path,
                 const std::string& pairing, int max_iterations,
                 bool no_sandwich) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.subcommand = "estimate";
  manifest.add_input(spec_path);
  manifest.add_input(respondents);
  manifest.add_input(tasks);

  const ModelSpec spec = load_spec(spec_path);
  ParamTable table(spec);
  const Dataset ds = load_dataset(respondents, tasks);

  FitOptions opt;
  opt.threads = g.threads;
  opt.pairing = pairing_from_string(pairing);
  opt.max_iterations = max_iterations;
  opt.compute_sandwich = !no_sandwich;

  ParamValues start;
  if (!start_path.empty()) {
    manifest.add_input(start_path);
    start = load_params(table, start_path);
  } else {
    start = neutral_start(spec, table, ds);
  }

  std::fprintf(stderr, "estimate: %s on %zu respondents, %d free parameters\n",
               spec.name.c_str(), ds.respondents.size(), table.n_slots());
  const FitResult fit = maximize_cml(spec, ds, start, opt);
  std::fprintf(stderr,
               "estimate: cml %.6f, %d iterations, gradient %.3e, %s\n",
               fit.cml, fit.iterations, fit.gradient_inf_norm,
               fit.converged ? "converged" : "not converged");

  const std::string out_path = resolve_out(g, out);
  write_text(out_path, fit_to_json(fit, table).dump(2) + "\n");
  manifest.outputs = {out_path};
  manifest.options = {{"spec", spec_path},
                      {"respondents", respondents},
                      {"tasks", tasks},
                      {"out", out},
                      {"start", start_path},
                      {"pairing", pairing},
                      {"max_iterations", max_iterations},
                      {"sandwich", !no_sandwich}};
  finish_manifest(manifest, g, t0);
  return fit.converged ? 0 : 2;
}

int cmd_wtp(const GlobalOpts& g, const std::string& fit_path,
            const std::string& spec_path, const std::string& attribute,
            const std::string& profile_path, const std::string& grid_path,
            const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.subcommand = "wtp";
  manifest.add_input(fit_path);
  manifest.add_input(spec_path);

  const ModelSpec spec = load_spec(spec_path);
  ParamTable table(spec);
  const ParamValues theta = load_params(table, fit_path);
  const WtpAttribute attr = wtp_attribute_from_string(attribute);

  WtpProfile profile;
  if (!profile_path.empty()) {
    manifest.add_input(profile_path);
    const json pj = load_json(profile_path);
    if (pj.is_string() ||
        (pj.contains("profile") && pj.at("profile") == "none")) {
      profile = WtpProfile{};
    } else {
      Demographics d;
      d.location = pj.at("location").get<std::string>();
      d.gender = pj.at("gender").get<std::string>();
      d.marital = pj.at("marital").get<std::string>();
      d.income_band = pj.at("income_band").get<std::string>();
      d.education = pj.at("education").get<std::string>();
      d.employment = pj.at("employment").get<std::string>();
      const std::string label =
          pj.contains("label") ? pj.at("label").get<std::string>() : "profile";
      profile = WtpProfile::from_demographics(d, label);
    }
  }

  WtpGrid grid;
  if (!grid_path.empty()) {
    manifest.add_input(grid_path);
    const json gj = load_json(grid_path);
    if (gj.contains("ev_price_lacs"))
      gj.at("ev_price_lacs").get_to(grid.ev_price_lacs);
    if (gj.contains("attr_values")) gj.at("attr_values").get_to(grid.attr_values);
    auto base = [&](const char* key, double& field) {
      if (gj.contains("icev") && gj.at("icev").contains(key))
        field = gj.at("icev").at(key).get<double>();
    };
    base("price_lacs", grid.base.icev_price_lacs);
    base("range_km", grid.base.icev_range_km);
    base("fast_min", grid.base.icev_fast_min);
    base("weekly_fuel_inr", grid.base.icev_weekly_fuel_inr);
  }

  const auto rows = wtp_curve(spec, table, theta, attr, grid, profile);
  const std::string out_path = resolve_out(g, out);
  write_text(out_path, wtp_curve_csv(spec.name, profile.label, attr, rows));
  manifest.outputs = {out_path};
  manifest.options = {{"fit", fit_path},       {"spec", spec_path},
                      {"attribute", attribute}, {"profile", profile_path},
                      {"grid", grid_path},      {"out", out}};
  finish_manifest(manifest, g, t0);
  std::fprintf(stderr, "wtp: %zu curve rows for %s/%s\n", rows.size(),
               spec.name.c_str(), attribute.c_str());
  return 0;
}

int cmd_discount_rate(const GlobalOpts& g, double wtp_inr, double weekly,
                      int years) {
  const auto t0 = std::chrono::steady_clock::now();
  const double rate = discount_rate(wtp_inr, weekly, years);
  std::printf("%.1f%%\n", 100.0 * rate);
  RunManifest manifest;
  manifest.subcommand = "discount-rate";
  manifest.options = {
      {"wtp", wtp_inr}, {"weekly_saving", weekly}, {"years", years}};
  finish_manifest(manifest, g, t0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference-dependent vehicle choice modeling toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  GlobalOpts g;
  app.add_option("--seed", g.seed, "master random seed")->capture_default_str();
  app.add_option("--threads", g.threads,
                 "worker threads (REFCHOICE_THREADS as fallback)")
      ->capture_default_str();
  app.add_option("--out-dir", g.out_dir,
                 "directory for outputs and manifest.json")
      ->capture_default_str();

  // design
  auto* design = app.add_subcommand(
      "design", "generate a balanced scenario bank and pivoted tasks");
  std::string d_spec, d_out = "tasks.csv", d_bank, d_resp;
  int d_n = 100;
  design->add_option("--spec", d_spec, "design spec JSON (default: built-in)");
  design->add_option("--n-respondents", d_n, "number of synthetic respondents");
  design->add_option("--respondents", d_resp,
                     "take reported prices from this respondents.csv");
  design->add_option("--out", d_out, "tasks.csv output")->required();
  design->add_option("--out-bank", d_bank, "optional bank.csv output");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "forward-simulate a dataset");
  std::string s_spec, s_params, s_out_r, s_out_t;
  int s_n = 1000;
  simulate->add_option("--spec", s_spec, "model spec JSON")->required();
  simulate->add_option("--params", s_params, "true parameter JSON")->required();
  simulate->add_option("--n", s_n, "respondents")->required();
  simulate->add_option("--out-respondents", s_out_r, "respondents.csv output")
      ->required();
  simulate->add_option("--out-tasks", s_out_t, "tasks.csv output")->required();

  // estimate
  auto* estimate =
      app.add_subcommand("estimate", "maximize the composite likelihood");
  std::string e_spec, e_resp, e_tasks, e_out = "fit.json", e_start;
  std::string e_pairing = "paper";
  int e_maxit = 500;
  bool e_nosand = false;
  estimate->add_option("--spec", e_spec, "model spec JSON")->required();
  estimate->add_option("--respondents", e_resp, "respondents.csv")->required();
  estimate->add_option("--tasks", e_tasks, "tasks.csv")->required();
  estimate->add_option("--out", e_out, "fit JSON output")->required();
  estimate->add_option("--start", e_start,
                       "start values (default: data-driven neutral start)");
  estimate->add_option("--pairing", e_pairing, "paper|extended")
      ->check(CLI::IsMember({"paper", "extended"}));
  estimate->add_option("--max-iterations", e_maxit, "iteration cap")
      ->capture_default_str();
  estimate->add_flag("--no-sandwich", e_nosand,
                     "skip the sandwich covariance computation");

  // wtp
  auto* wtp_cmd = app.add_subcommand("wtp", "willingness-to-pay curves");
  std::string w_fit, w_spec, w_attr, w_profile, w_grid, w_out = "curve.csv";
  wtp_cmd->add_option("--fit", w_fit, "fit.json or bare parameter JSON")
      ->required();
  wtp_cmd->add_option("--spec", w_spec, "model spec JSON")->required();
  wtp_cmd->add_option("--attribute", w_attr, "fastcharge|range|fuel")
      ->required()
      ->check(CLI::IsMember({"fastcharge", "range", "fuel"}));
  wtp_cmd->add_option("--profile", w_profile,
                      "demographic profile JSON (default: none)");
  wtp_cmd->add_option("--grid", w_grid, "grid JSON (default: built-in)");
  wtp_cmd->add_option("--out", w_out, "curve CSV output")->required();

  // discount-rate
  auto* dr = app.add_subcommand("discount-rate",
                                "annual discount rate implied by a fuel WTP");
  double dr_wtp = 0, dr_weekly = 0;
  int dr_years = 15;
  dr->add_option("--wtp", dr_wtp, "upfront payment, INR")->required();
  dr->add_option("--weekly-saving", dr_weekly, "weekly saving, INR")
      ->required();
  dr->add_option("--years", dr_years, "vehicle life in years")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message and usage
    return code == 0 ? 0 : 1;
  }

  try {
    if (design->parsed())
      return cmd_design(g, d_spec, d_n, d_out, d_bank, d_resp);
    if (simulate->parsed())
      return cmd_simulate(g, s_spec, s_params, s_n, s_out_r, s_out_t);
    if (estimate->parsed())
      return cmd_estimate(g, e_spec, e_resp, e_tasks, e_out, e_start,
                          e_pairing, e_maxit, e_nosand);
    if (wtp_cmd->parsed())
      return cmd_wtp(g, w_fit, w_spec, w_attr, w_profile, w_grid, w_out);
    if (dr->parsed()) return cmd_discount_rate(g, dr_wtp, dr_weekly, dr_years);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
