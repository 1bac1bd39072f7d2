#pragma once

// Forward simulation of the full generative model, used for parameter
// recovery experiments and the oracle tests. Per-respondent substreams make
// generation order-independent and bit-reproducible for a given seed.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "refchoice/design.hpp"
#include "refchoice/estimator.hpp"

namespace refchoice {

struct SimConfig {
  int n_respondents = 1000;
  std::uint64_t seed = 1;
  DesignSpec design;
  // weekly kilometres: lognormal around the sample's average figure
  double weekly_km_median = 230.0;
  double weekly_km_sigma = 0.5;
  // reported reference price: uniform, INR lacs
  double price_lo = 5.0, price_hi = 20.0;
  // independent categorical marginals per demographic field
  std::map<std::string, std::map<std::string, double>> demographics;
  PairingPolicy pairing = PairingPolicy::paper;

  // Default marginals loosely matched to the published sample composition;
  // the joint distribution is never published, so fields draw independently.
  static SimConfig defaults() {
    SimConfig c;
    c.demographics = {
        {"location",
         {{"delhi_and_others", 0.40},
          {"mumbai", 0.18},
          {"bangalore", 0.16},
          {"chennai", 0.14},
          {"calcutta", 0.12}}},
        {"gender", {{"male", 0.764}, {"female", 0.236}}},
        {"marital",
         {{"single_and_others", 0.449},
          {"couple", 0.30},
          {"couple_with_kid", 0.251}}},
        {"income_band",
         {{"below_5_lacs", 0.208},
          {"5_to_10_lacs", 0.251},
          {"10_to_15_lacs", 0.179},
          {"15_to_20_lacs", 0.179},
          {"20_lacs_plus", 0.183}}},
        {"education",
         {{"below_bachelors", 0.117},
          {"bachelors", 0.416},
          {"masters_plus", 0.467}}},
        {"employment",
         {{"private", 0.734},
          {"unemployed", 0.102},
          {"self_employed", 0.086},
          {"government", 0.078}}},
    };
    return c;
  }

  void validate() const {
    if (n_respondents <= 0)
      throw ValidationError("simulate: n_respondents must be positive");
    if (!(weekly_km_median > 0.0) || !(weekly_km_sigma > 0.0))
      throw ValidationError("simulate: bad weekly km distribution");
    if (!(price_lo > 0.0) || !(price_hi > price_lo))
      throw ValidationError("simulate: bad reported price range");
    for (const auto& f : vocab::fields()) {
      auto it = demographics.find(f);
      if (it == demographics.end())
        throw ValidationError("simulate: missing demographic marginals for " +
                              f);
      double total = 0.0;
      for (const auto& [level, p] : it->second) {
        if (!vocab::contains(vocab::field(f), level))
          throw ValidationError("simulate: unknown level '" + level + "' of " +
                                f);
        if (p < 0.0) throw ValidationError("simulate: negative probability");
        total += p;
      }
      if (std::fabs(total - 1.0) > 1e-9)
        throw ValidationError("simulate: marginals of " + f +
                              " do not sum to one");
    }
  }
};

namespace detail {

// per-purpose substream tags
inline constexpr std::uint64_t kTagDemo = 0x64656d6full;
inline constexpr std::uint64_t kTagKm = 0x6b6d0000ull;
inline constexpr std::uint64_t kTagPrice = 0x70726963ull;
inline constexpr std::uint64_t kTagLatent = 0x6c617400ull;
inline constexpr std::uint64_t kTagInd = 0x696e6400ull;
inline constexpr std::uint64_t kTagChoice = 0x63686f00ull;

inline std::string draw_level(std::mt19937_64& rng,
                              const std::map<std::string, double>& marginals,
                              const std::vector<std::string>& order) {
  std::vector<double> probs;
  probs.reserve(order.size());
  for (const auto& level : order) {
    auto it = marginals.find(level);
    probs.push_back(it == marginals.end() ? 0.0 : it->second);
  }
  return order[categorical(rng, probs)];
}

}  // namespace detail

// Draw one respondent's exogenous record (demographics, kilometres, reported
// price) and assign their tasks from the bank.
inline Respondent simulate_respondent_frame(
    const SimConfig& cfg, const std::vector<ScenarioTemplate>& bank,
    std::int64_t id) {
  Respondent r;
  r.respondent_id = id;
  auto rng = substream(cfg.seed, detail::kTagDemo, static_cast<std::uint64_t>(id));
  r.demographics.location =
      detail::draw_level(rng, cfg.demographics.at("location"), vocab::location());
  r.demographics.gender =
      detail::draw_level(rng, cfg.demographics.at("gender"), vocab::gender());
  r.demographics.marital =
      detail::draw_level(rng, cfg.demographics.at("marital"), vocab::marital());
  r.demographics.income_band = detail::draw_level(
      rng, cfg.demographics.at("income_band"), vocab::income_band());
  r.demographics.education = detail::draw_level(
      rng, cfg.demographics.at("education"), vocab::education());
  r.demographics.employment = detail::draw_level(
      rng, cfg.demographics.at("employment"), vocab::employment());

  auto km_rng = substream(cfg.seed, detail::kTagKm, static_cast<std::uint64_t>(id));
  r.weekly_km =
      cfg.weekly_km_median * std::exp(cfg.weekly_km_sigma * normal(km_rng));
  auto price_rng =
      substream(cfg.seed, detail::kTagPrice, static_cast<std::uint64_t>(id));
  r.reported_icev_price_lacs = uniform_real(price_rng, cfg.price_lo, cfg.price_hi);
  r.tasks = assign_tasks(bank, cfg.design, r, cfg.seed);
  return r;
}

// out_latents, when given, receives the drawn attitude vector of each
// respondent (a test hook for distributional checks).
inline Dataset simulate_dataset(const SimConfig& cfg, const ModelSpec& spec,
                                const ParamTable& table,
                                const ParamValues& truth,
                                std::vector<LatentVector>* out_latents = nullptr) {
  cfg.validate();
  table.validate_values(truth);
  const auto bank = generate_bank(cfg.design, cfg.seed);

  // Cholesky factor of the latent error correlation matrix
  const auto rho = table.correlations(truth);
  const double l21 = rho[0];
  const double l22 = std::sqrt(1.0 - l21 * l21);
  const double l31 = rho[1];
  const double l32 = (rho[2] - l31 * l21) / l22;
  const double t33 = 1.0 - l31 * l31 - l32 * l32;
  if (!(l22 > 0.0) || !(t33 > 0.0))
    throw ValidationError("simulate: correlation matrix not positive definite");
  const double l33 = std::sqrt(t33);

  Dataset ds;
  ds.respondents.resize(cfg.n_respondents);
  if (out_latents) out_latents->resize(cfg.n_respondents);
  for (int i = 0; i < cfg.n_respondents; ++i) {
    const std::int64_t id = i + 1;
    Respondent r = simulate_respondent_frame(cfg, bank, id);

    // latent attitudes x* = Pi s + gamma
    auto lat_rng =
        substream(cfg.seed, detail::kTagLatent, static_cast<std::uint64_t>(id));
    const double z1 = normal(lat_rng), z2 = normal(lat_rng), z3 = normal(lat_rng);
    LatentVector gamma{z1, l21 * z1 + l22 * z2, l31 * z1 + l32 * z2 + l33 * z3};
    LatentVector xs = latent_means(spec, table, truth, r.demographics);
    for (int a = 0; a < kNumLatents; ++a) xs[a] += gamma[a];
    if (out_latents) (*out_latents)[i] = xs;

    // ordinal indicators: propensity with unit normal noise cut at thresholds
    auto ind_rng =
        substream(cfg.seed, detail::kTagInd, static_cast<std::uint64_t>(id));
    for (const auto& m : spec.measurement) {
      double propensity = truth[table.index(m.intercept)];
      for (const auto& [latent, name] : m.loadings)
        propensity += truth[table.index(name)] * xs[latent];
      propensity += normal(ind_rng);
      const auto psi = [&](int pos) {
        return truth[table.index(m.threshold_block + "_" +
                                 std::to_string(pos))];
      };
      const double cuts[kNumThresholds] = {0.0, psi(2), psi(3), psi(4)};
      int cat = 1;
      while (cat <= kNumThresholds && propensity > cuts[cat - 1]) ++cat;
      r.indicators[m.indicator] = cat;
    }

    // choices: utility difference at the drawn latents plus standard normal
    // choice noise
    auto choice_rng =
        substream(cfg.seed, detail::kTagChoice, static_cast<std::uint64_t>(id));
    for (auto& task : r.tasks) {
      const TaskAttrs attrs = TaskAttrs::from(task, r.weekly_km);
      const auto [v_ev, v_icev] =
          systematic_utility(spec, table, truth, attrs, r.indicators, xs);
      const double du = v_ev - v_icev + normal(choice_rng);
      task.chosen = du > 0.0 ? Chosen::ev : Chosen::icev;
    }
    ds.respondents[i] = std::move(r);
  }
  ds.validate();
  return ds;
}

// ---- recovery experiment -----------------------------------------------------

struct RecoveryRow {
  std::string name;
  double truth = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double bias = 0.0;
  double z = 0.0;  // |estimate - truth| / SE
  bool fixed = false;
};

struct RecoveryReport {
  FitResult fit;
  std::vector<RecoveryRow> rows;
  double share_within_3se = 0.0;  // over free parameters
  int n_free = 0;

  nlohmann::json to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const auto& r : rows)
      rows_j.push_back({{"name", r.name},
                        {"truth", r.truth},
                        {"estimate", r.estimate},
                        {"std_error", r.std_error},
                        {"bias", r.bias},
                        {"z", r.z},
                        {"fixed", r.fixed}});
    return nlohmann::json{{"model", fit.model},
                          {"converged", fit.converged},
                          {"cml", fit.cml},
                          {"iterations", fit.iterations},
                          {"gradient_inf_norm", fit.gradient_inf_norm},
                          {"share_within_3se", share_within_3se},
                          {"n_free", n_free},
                          {"parameters", rows_j}};
  }
};

inline RecoveryReport recovery_experiment(const SimConfig& cfg,
                                          const ModelSpec& spec,
                                          const ParamValues& truth,
                                          const FitOptions& opt) {
  ParamTable table(spec);
  const Dataset ds = simulate_dataset(cfg, spec, table, truth);
  FitOptions o = opt;
  o.compute_sandwich = true;
  o.pairing = cfg.pairing;
  FitResult fit = maximize_cml(spec, ds, neutral_start(spec, table, ds), o);

  RecoveryReport rep;
  rep.rows.reserve(table.size());
  int within = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& info = table.info(static_cast<int>(i));
    RecoveryRow row;
    row.name = info.name;
    row.truth = truth[i];
    row.estimate = fit.params[i];
    row.std_error = fit.has_sandwich ? fit.std_errors[i] : 0.0;
    row.bias = row.estimate - row.truth;
    row.fixed = info.fixed;
    if (!info.fixed) {
      ++rep.n_free;
      row.z = row.std_error > 0.0 ? std::fabs(row.bias) / row.std_error : kInf;
      if (row.z <= 3.0) ++within;
    }
    rep.rows.push_back(std::move(row));
  }
  rep.share_within_3se = rep.n_free ? double(within) / rep.n_free : 0.0;
  rep.fit = std::move(fit);
  return rep;
}

}  // namespace refchoice
