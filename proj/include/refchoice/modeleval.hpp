#pragma once

// Reference evaluation of the systematic utility and the latent loading
// vector. This is the plain, readable path; the estimator uses a compiled
// per-respondent plan that must agree with it (tested).

#include <array>
#include <cmath>
#include <optional>
#include <utility>

#include "refchoice/datamodel.hpp"
#include "refchoice/modelspec.hpp"
#include "refchoice/params.hpp"

namespace refchoice {

// Sign-preserving power sign(d)*|d|^alpha. Odd in d, strictly increasing,
// and exactly linear at alpha = 1 so the restricted model nests bit-for-bit.
inline double ref_power(double d, double alpha) {
  if (!(alpha > 0.0))
    throw ValidationError("ref_power: curvature must be positive");
  if (d == 0.0) return 0.0;
  if (alpha == 1.0) return d;
  return std::copysign(std::pow(std::fabs(d), alpha), d);
}

// Attribute expressions of one alternative, in model units (price in lacs,
// range as log of 100 km, weekly fuel in INR hundreds, charging in minutes).
struct AttrValues {
  double price_lacs = 0.0;
  double log_range_100km = 0.0;
  double weekly_fuel_inr100 = 0.0;
  double fast_charge_min = 0.0;
  double spacing_km = 0.0;
  std::optional<double> slow_charge_hr;
  double parking01 = 0.0;
  double lane01 = 0.0;

  static AttrValues from(const AlternativeProfile& p, double weekly_km) {
    AttrValues a;
    a.price_lacs = p.price_lacs;
    a.log_range_100km = std::log(p.range_km / 100.0);
    a.weekly_fuel_inr100 = weekly_fuel_cost(p.running_cost_inr_km, weekly_km);
    a.fast_charge_min = p.fast_charge_min;
    a.spacing_km = p.charger_spacing_km;
    a.slow_charge_hr = p.slow_charge_hr;
    a.parking01 = p.reserved_parking ? 1.0 : 0.0;
    a.lane01 = p.special_lane ? 1.0 : 0.0;
    return a;
  }

  double value(Attr attr) const {
    switch (attr) {
      case Attr::price_lacs: return price_lacs;
      case Attr::log_range_100km: return log_range_100km;
      case Attr::weekly_fuel_inr100: return weekly_fuel_inr100;
      case Attr::fast_charge_min: return fast_charge_min;
      case Attr::spacing_km: return spacing_km;
      case Attr::slow_charge_hr:
        if (!slow_charge_hr)
          throw ValidationError(
              "attribute expression references slow charging on an "
              "alternative without it");
        return *slow_charge_hr;
      case Attr::parking: return parking01;
      case Attr::lane: return lane01;
    }
    throw ValidationError("bad attribute");
  }
};

struct TaskAttrs {
  AttrValues ev;
  AttrValues icev;

  static TaskAttrs from(const ChoiceTask& t, double weekly_km) {
    return {AttrValues::from(t.ev, weekly_km),
            AttrValues::from(t.icev, weekly_km)};
  }

  double expr(Attr attr, ExprMode mode, Alt alt) const {
    if (mode == ExprMode::diff) return ev.value(attr) - icev.value(attr);
    return (alt == Alt::ev ? ev : icev).value(attr);
  }

  double ref_diff(Attr attr, DiffDirection dir) const {
    const double d = ev.value(attr) - icev.value(attr);
    return dir == DiffDirection::ev_minus_icev ? d : -d;
  }
};

using LatentVector = std::array<double, kNumLatents>;

// Both systematic utilities at given latent values. Dummy terms use the
// respondent's observed indicator levels against their declared base.
inline std::pair<double, double> systematic_utility(
    const ModelSpec& spec, const ParamTable& table, const ParamValues& theta,
    const TaskAttrs& attrs, const std::array<int, kNumIndicators>& indicators,
    const LatentVector& latents) {
  for (double x : latents)
    if (!std::isfinite(x))
      throw ValidationError("systematic_utility: latent value not finite");
  double v_ev = 0.0, v_icev = 0.0;
  for (const auto& t : spec.terms) {
    double contrib = 0.0;
    switch (t.kind) {
      case Term::Kind::constant:
        contrib = theta[table.index(t.coef)];
        break;
      case Term::Kind::linear:
        contrib = theta[table.index(t.coef)] *
                  (t.alt == Alt::ev ? attrs.ev : attrs.icev).value(t.attr);
        break;
      case Term::Kind::ref_power:
        contrib = theta[table.index(t.coef)] *
                  ref_power(attrs.ref_diff(t.attr, t.direction),
                            theta[table.index(t.curvature)]);
        break;
      case Term::Kind::dummy:
        contrib = indicators[t.indicator] == t.level
                      ? theta[table.index(t.coef)]
                      : 0.0;
        break;
      case Term::Kind::latent_main:
        contrib = theta[table.index(t.coef)] * latents[t.latent];
        break;
      case Term::Kind::latent_interaction:
        contrib = theta[table.index(t.coef)] * latents[t.latent] *
                  attrs.expr(t.attr, t.mode, t.alt);
        break;
    }
    (t.alt == Alt::ev ? v_ev : v_icev) += contrib;
  }
  return {v_ev, v_icev};
}

// Coefficient vector multiplying the latent disturbance in the utility
// difference (EV minus ICEV): main effects plus interactions evaluated at the
// task's attribute expressions, ICEV-side entries entering negatively.
inline LatentVector latent_loading_vector(const ModelSpec& spec,
                                          const ParamTable& table,
                                          const ParamValues& theta,
                                          const TaskAttrs& attrs) {
  LatentVector c{0.0, 0.0, 0.0};
  for (const auto& t : spec.terms) {
    const double sign = t.alt == Alt::ev ? 1.0 : -1.0;
    if (t.kind == Term::Kind::latent_main) {
      c[t.latent] += sign * theta[table.index(t.coef)];
    } else if (t.kind == Term::Kind::latent_interaction) {
      c[t.latent] += sign * theta[table.index(t.coef)] *
                     attrs.expr(t.attr, t.mode, t.alt);
    }
  }
  return c;
}

// Latent means implied by demographics: x* = Pi s evaluated at zero noise.
inline LatentVector latent_means(const ModelSpec& spec, const ParamTable& table,
                                 const ParamValues& theta,
                                 const Demographics& demo) {
  demo.validate("profile");
  LatentVector m{0.0, 0.0, 0.0};
  for (const auto& s : spec.structural)
    if (demo.level(s.field) == s.level)
      m[s.latent] += theta[table.index(s.coef)];
  return m;
}

}  // namespace refchoice
