#pragma once

// Shipped model presets. The three variants share one term list and differ
// only in constraints: the base model pins all curvatures at 1 and all
// latent-attribute interactions at 0, the curvature model frees the
// curvatures, the full model frees the interactions as well. Alongside each
// spec there is a coefficient set holding the published point estimates used
// as fixtures and simulation truths.

#include <string>

#include "refchoice/modelspec.hpp"
#include "refchoice/params.hpp"

namespace refchoice::presets {

namespace detail {

inline ModelSpec base_spec() {
  ModelSpec s;
  s.latents = {"climate_doubter", "evtech_believer", "early_adopter"};
  constexpr int kClimate = 0, kEvTech = 1, kEarly = 2;

  auto term = [&](Term t) { s.terms.push_back(std::move(t)); };

  {
    Term t;
    t.kind = Term::Kind::constant;
    t.alt = Alt::ev;
    t.coef = "asc_ev";
    term(t);
  }
  {
    Term t;
    t.kind = Term::Kind::linear;
    t.alt = Alt::ev;
    t.attr = Attr::fast_charge_min;
    t.coef = "b_fast_ev";
    term(t);
    t.alt = Alt::icev;
    t.coef = "b_fast_icev";
    term(t);
  }
  auto ref_power_term = [&](Attr attr, DiffDirection dir, const char* coef,
                            const char* curv) {
    Term t;
    t.kind = Term::Kind::ref_power;
    t.alt = Alt::ev;
    t.attr = attr;
    t.direction = dir;
    t.coef = coef;
    t.curvature = curv;
    term(t);
  };
  ref_power_term(Attr::price_lacs, DiffDirection::ev_minus_icev, "b_price",
                 "alpha_price");
  ref_power_term(Attr::log_range_100km, DiffDirection::ev_minus_icev,
                 "b_range", "alpha_range");
  ref_power_term(Attr::weekly_fuel_inr100, DiffDirection::icev_minus_ev,
                 "b_fuel", "alpha_fuel");

  auto dummies = [&](int indicator, const char* stem) {
    for (int level : {1, 2, 4, 5}) {
      Term t;
      t.kind = Term::Kind::dummy;
      t.alt = Alt::ev;
      t.indicator = indicator;
      t.level = level;
      t.base = 3;
      t.coef = std::string(stem) + "_l" + std::to_string(level);
      term(t);
    }
  };
  dummies(9, "th_ind10");   // EV knowledge, middle category as base
  dummies(10, "th_ind11");  // social network effect, neutral as base

  auto latent_main = [&](int latent, const char* coef) {
    Term t;
    t.kind = Term::Kind::latent_main;
    t.alt = Alt::ev;
    t.latent = latent;
    t.coef = coef;
    term(t);
  };
  latent_main(kClimate, "delta_climate");
  latent_main(kEvTech, "delta_evtech");
  latent_main(kEarly, "delta_early");

  auto interaction = [&](Alt alt, int latent, Attr attr, ExprMode mode,
                         const char* coef) {
    Term t;
    t.kind = Term::Kind::latent_interaction;
    t.alt = alt;
    t.latent = latent;
    t.attr = attr;
    t.mode = mode;
    t.coef = coef;
    term(t);
  };
  interaction(Alt::ev, kClimate, Attr::price_lacs, ExprMode::diff,
              "phi_climate_dprice");
  interaction(Alt::ev, kEvTech, Attr::price_lacs, ExprMode::diff,
              "phi_evtech_dprice");
  interaction(Alt::ev, kEarly, Attr::price_lacs, ExprMode::diff,
              "phi_early_dprice");
  interaction(Alt::ev, kEvTech, Attr::log_range_100km, ExprMode::diff,
              "phi_evtech_dlogrange");
  interaction(Alt::ev, kEarly, Attr::log_range_100km, ExprMode::own,
              "phi_early_logrange");
  interaction(Alt::ev, kEarly, Attr::weekly_fuel_inr100, ExprMode::own,
              "phi_early_fuel");
  interaction(Alt::icev, kEarly, Attr::price_lacs, ExprMode::own,
              "phi_early_icev_price");
  interaction(Alt::icev, kEarly, Attr::fast_charge_min, ExprMode::own,
              "phi_early_icev_fast");

  auto structural = [&](int latent, const char* field, const char* level,
                        const char* coef) {
    s.structural.push_back(StructuralEntry{latent, field, level, coef});
  };
  structural(kClimate, "location", "mumbai", "pi_climate_mumbai");
  structural(kClimate, "location", "bangalore", "pi_climate_bangalore");
  structural(kClimate, "location", "chennai", "pi_climate_chennai");
  structural(kClimate, "location", "calcutta", "pi_climate_calcutta");
  structural(kClimate, "gender", "female", "pi_climate_female");
  structural(kClimate, "marital", "couple", "pi_climate_couple");
  structural(kClimate, "marital", "couple_with_kid", "pi_climate_couple_kid");
  // one shared slope across the four non-base income bands
  structural(kClimate, "income_band", "below_5_lacs", "pi_climate_income");
  structural(kClimate, "income_band", "5_to_10_lacs", "pi_climate_income");
  structural(kClimate, "income_band", "10_to_15_lacs", "pi_climate_income");
  structural(kClimate, "income_band", "15_to_20_lacs", "pi_climate_income");
  // one shared slope across both non-base education levels
  structural(kClimate, "education", "below_bachelors", "pi_climate_education");
  structural(kClimate, "education", "bachelors", "pi_climate_education");
  structural(kClimate, "employment", "government", "pi_climate_government");
  structural(kClimate, "employment", "self_employed", "pi_climate_selfemp");
  structural(kClimate, "employment", "unemployed", "pi_climate_unemployed");

  structural(kEvTech, "location", "mumbai", "pi_evtech_mumbai");
  structural(kEvTech, "location", "bangalore", "pi_evtech_bangalore");
  structural(kEvTech, "location", "chennai", "pi_evtech_chennai");
  structural(kEvTech, "location", "calcutta", "pi_evtech_calcutta");
  structural(kEvTech, "gender", "female", "pi_evtech_female");
  structural(kEvTech, "marital", "couple", "pi_evtech_couple");
  structural(kEvTech, "marital", "couple_with_kid", "pi_evtech_couple_kid");
  structural(kEvTech, "income_band", "below_5_lacs", "pi_evtech_income_low");
  structural(kEvTech, "income_band", "5_to_10_lacs", "pi_evtech_income_mid");
  structural(kEvTech, "income_band", "10_to_15_lacs", "pi_evtech_income_mid");
  structural(kEvTech, "income_band", "15_to_20_lacs", "pi_evtech_income_mid");
  structural(kEvTech, "education", "below_bachelors",
             "pi_evtech_below_bachelors");
  structural(kEvTech, "education", "bachelors", "pi_evtech_bachelors");
  structural(kEvTech, "employment", "government", "pi_evtech_government");
  structural(kEvTech, "employment", "self_employed", "pi_evtech_selfemp");
  structural(kEvTech, "employment", "unemployed", "pi_evtech_unemployed");

  structural(kEarly, "location", "mumbai", "pi_early_mumbai");
  structural(kEarly, "location", "bangalore", "pi_early_bangalore");
  structural(kEarly, "location", "chennai", "pi_early_chennai");
  structural(kEarly, "location", "calcutta", "pi_early_calcutta");
  structural(kEarly, "gender", "female", "pi_early_female");
  structural(kEarly, "marital", "couple", "pi_early_couple");
  structural(kEarly, "marital", "couple_with_kid", "pi_early_couple_kid");
  structural(kEarly, "income_band", "below_5_lacs", "pi_early_income_below5");
  structural(kEarly, "income_band", "5_to_10_lacs", "pi_early_income_5_10");
  structural(kEarly, "income_band", "10_to_15_lacs", "pi_early_income_10_15");
  // 15-20 lacs and education excluded from the early-adopter equation
  structural(kEarly, "employment", "government", "pi_early_government");
  structural(kEarly, "employment", "self_employed", "pi_early_selfemp");
  structural(kEarly, "employment", "unemployed", "pi_early_unemployed");

  auto dedicated = [&](int indicator, int latent, const char* tau) {
    MeasurementMap m;
    m.indicator = indicator;
    m.loadings[latent] = tau;
    m.intercept = std::string("c_") + indicator_name(indicator);
    m.threshold_block = std::string("psi_") + indicator_name(indicator);
    s.measurement.push_back(std::move(m));
  };
  dedicated(0, kClimate, "tau_ind01");
  dedicated(1, kClimate, "tau_ind02");
  dedicated(2, kClimate, "tau_ind03");
  dedicated(3, kEvTech, "tau_ind04");
  dedicated(4, kEvTech, "tau_ind05");
  dedicated(5, kEvTech, "tau_ind06");
  dedicated(6, kEarly, "tau_ind07");
  dedicated(7, kEarly, "tau_ind08");
  dedicated(8, kEarly, "tau_ind09");

  auto cross = [&](int indicator, const char* stem) {
    MeasurementMap m;
    m.indicator = indicator;
    m.loadings[kClimate] = std::string(stem) + "_climate";
    m.loadings[kEvTech] = std::string(stem) + "_evtech";
    m.loadings[kEarly] = std::string(stem) + "_early";
    m.intercept = std::string("c_") + indicator_name(indicator);
    m.threshold_block = std::string("psi_") + indicator_name(indicator);
    s.measurement.push_back(std::move(m));
  };
  cross(9, "zeta_ind10");
  cross(10, "zeta_ind11");

  s.correlations.push_back({kClimate, kEvTech, "rho_climate_evtech"});
  s.correlations.push_back({kClimate, kEarly, "rho_climate_early"});
  s.correlations.push_back({kEvTech, kEarly, "rho_evtech_early"});

  s.sign_anchors["climate_doubter"] = SignAnchor{0, -1};
  s.sign_anchors["evtech_believer"] = SignAnchor{3, -1};
  s.sign_anchors["early_adopter"] = SignAnchor{6, -1};
  return s;
}

inline const std::vector<std::string>& interaction_names() {
  static const std::vector<std::string> names{
      "phi_climate_dprice",  "phi_evtech_dprice",  "phi_early_dprice",
      "phi_evtech_dlogrange", "phi_early_logrange", "phi_early_fuel",
      "phi_early_icev_price", "phi_early_icev_fast"};
  return names;
}

// Attitude-system point estimates shared by all preset coefficient sets.
inline void set_sem_values(const ParamTable& t, ParamValues& v) {
  auto set = [&](const char* name, double value) { t.set(v, name, value); };

  set("pi_climate_mumbai", 0.027);
  set("pi_climate_bangalore", 0.259);
  set("pi_climate_chennai", 0.195);
  set("pi_climate_calcutta", -0.208);
  set("pi_climate_female", -0.050);
  set("pi_climate_couple", 0.163);
  set("pi_climate_couple_kid", 0.113);
  set("pi_climate_income", 0.018);
  set("pi_climate_education", 0.025);
  set("pi_climate_government", -0.192);
  set("pi_climate_selfemp", -0.242);
  set("pi_climate_unemployed", 0.248);

  set("pi_evtech_mumbai", 0.013);
  set("pi_evtech_bangalore", 0.168);
  set("pi_evtech_chennai", -0.441);
  set("pi_evtech_calcutta", 0.284);
  set("pi_evtech_female", -0.230);
  set("pi_evtech_couple", -0.146);
  set("pi_evtech_couple_kid", -0.254);
  set("pi_evtech_income_low", -0.150);
  set("pi_evtech_income_mid", -0.079);
  set("pi_evtech_below_bachelors", -0.297);
  set("pi_evtech_bachelors", -0.151);
  set("pi_evtech_government", -0.572);
  set("pi_evtech_selfemp", 0.168);
  set("pi_evtech_unemployed", -0.066);

  set("pi_early_mumbai", 0.080);
  set("pi_early_bangalore", 0.094);
  set("pi_early_chennai", -0.258);
  set("pi_early_calcutta", 0.235);
  set("pi_early_female", 0.188);
  set("pi_early_couple", 0.131);
  set("pi_early_couple_kid", 0.115);
  set("pi_early_income_below5", 0.606);
  set("pi_early_income_5_10", 0.419);
  set("pi_early_income_10_15", 0.245);
  set("pi_early_government", -0.529);
  set("pi_early_selfemp", 0.281);
  set("pi_early_unemployed", -0.228);

  set("rho_climate_evtech", -0.065);
  set("rho_climate_early", 0.0);
  set("rho_evtech_early", 0.802);

  auto meas = [&](const char* ind, double c, double p2, double p3, double p4) {
    t.set(v, std::string("c_") + ind, c);
    t.set(v, std::string("psi_") + ind + "_2", p2);
    t.set(v, std::string("psi_") + ind + "_3", p3);
    t.set(v, std::string("psi_") + ind + "_4", p4);
  };
  auto tau = [&](const char* name, double value) { t.set(v, name, value); };

  tau("tau_ind01", -0.94); meas("ind01", 2.64, 0.33, 1.13, 2.79);
  tau("tau_ind02", -0.74); meas("ind02", 2.73, 0.38, 1.30, 3.20);
  tau("tau_ind03", -0.96); meas("ind03", 2.97, 0.63, 1.61, 3.31);
  tau("tau_ind04", -1.05); meas("ind04", 1.55, 1.73, 2.69, 4.28);
  tau("tau_ind05", -0.87); meas("ind05", 1.80, 1.42, 2.32, 3.90);
  tau("tau_ind06", -0.86); meas("ind06", 1.78, 1.42, 2.26, 3.77);
  tau("tau_ind07", -0.69); meas("ind07", 2.74, 0.84, 1.67, 3.23);
  tau("tau_ind08", -0.75); meas("ind08", 3.00, 1.28, 2.02, 3.67);
  tau("tau_ind09", -0.44); meas("ind09", 1.99, 1.19, 2.12, 3.31);

  tau("zeta_ind10_climate", -0.08);
  tau("zeta_ind10_evtech", 1.33);
  tau("zeta_ind10_early", -1.32);
  meas("ind10", 3.86, 1.79, 3.33, 5.29);
  tau("zeta_ind11_climate", -0.38);
  tau("zeta_ind11_evtech", -0.22);
  tau("zeta_ind11_early", 0.03);
  meas("ind11", 1.55, 0.83, 1.78, 3.19);
}

}  // namespace detail

inline ModelSpec model1() {
  ModelSpec s = detail::base_spec();
  s.name = "model1";
  for (const char* a : {"alpha_price", "alpha_range", "alpha_fuel"})
    s.constraints.push_back({a, 1.0});
  for (const auto& phi : detail::interaction_names())
    s.constraints.push_back({phi, 0.0});
  s.validate();
  return s;
}

inline ModelSpec model2() {
  ModelSpec s = detail::base_spec();
  s.name = "model2";
  for (const auto& phi : detail::interaction_names())
    s.constraints.push_back({phi, 0.0});
  s.validate();
  return s;
}

inline ModelSpec model3() {
  ModelSpec s = detail::base_spec();
  s.name = "model3";
  s.validate();
  return s;
}

inline ModelSpec model(const std::string& name) {
  if (name == "model1") return model1();
  if (name == "model2") return model2();
  if (name == "model3") return model3();
  throw ValidationError("unknown preset model '" + name + "'");
}

// Published point estimates for each variant, usable as WTP fixture inputs
// and as simulation truths.
inline ParamValues table_values(const ModelSpec& spec, const ParamTable& t) {
  ParamValues v = t.make_values();
  detail::set_sem_values(t, v);
  auto set = [&](const char* name, double value) { t.set(v, name, value); };
  auto dcm = [&](double asc, double fast_ev, double fast_icev, double b_price,
                 double a_price, double b_range, double a_range, double b_fuel,
                 double a_fuel) {
    set("asc_ev", asc);
    set("b_fast_ev", fast_ev);
    set("b_fast_icev", fast_icev);
    set("b_price", b_price);
    if (!spec.is_fixed("alpha_price")) set("alpha_price", a_price);
    set("b_range", b_range);
    if (!spec.is_fixed("alpha_range")) set("alpha_range", a_range);
    set("b_fuel", b_fuel);
    if (!spec.is_fixed("alpha_fuel")) set("alpha_fuel", a_fuel);
  };
  auto dummies = [&](double k1, double k2, double k4, double k5, double s1,
                     double s2, double s4, double s5) {
    set("th_ind10_l1", k1);
    set("th_ind10_l2", k2);
    set("th_ind10_l4", k4);
    set("th_ind10_l5", k5);
    set("th_ind11_l1", s1);
    set("th_ind11_l2", s2);
    set("th_ind11_l4", s4);
    set("th_ind11_l5", s5);
  };
  auto deltas = [&](double c, double e, double a) {
    set("delta_climate", c);
    set("delta_evtech", e);
    set("delta_early", a);
  };

  if (spec.name == "model1") {
    dcm(0.17, -0.002, -0.006, -0.10, 1.0, 0.60, 1.0, 0.009, 1.0);
    dummies(-0.36, -0.10, 0.22, 0.49, -0.46, -0.32, 0.69, 1.18);
    deltas(-0.61, -0.22, 0.94);
  } else if (spec.name == "model2") {
    dcm(1.85, -0.003, -0.007, -1.37, 0.24, 0.74, 0.51, 0.020, 0.80);
    dummies(-0.42, -0.10, 0.22, 0.49, -0.45, -0.32, 0.70, 1.18);
    deltas(-0.61, -0.21, 0.93);
  } else if (spec.name == "model3") {
    dcm(1.88, -0.002, -0.004, -1.22, 0.31, 0.94, 0.55, 0.024, 0.81);
    dummies(-0.37, -0.09, 0.24, 0.51, -0.44, -0.31, 0.73, 1.22);
    deltas(-0.55, 0.10, 0.55);
    set("phi_climate_dprice", -0.026);
    set("phi_evtech_dprice", -0.005);
    set("phi_early_dprice", 0.047);
    set("phi_evtech_dlogrange", 0.578);
    set("phi_early_logrange", 0.145);
    set("phi_early_fuel", -0.030);
    set("phi_early_icev_price", -0.017);
    set("phi_early_icev_fast", -0.010);
  } else {
    throw ValidationError("no table values for model '" + spec.name + "'");
  }
  t.validate_values(v);
  return v;
}

}  // namespace refchoice::presets
