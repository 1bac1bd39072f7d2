#pragma once

// Willingness-to-pay machinery: marginal utilities of the EV attributes at a
// chosen evaluation point, their ratio to the price marginal, grid curves,
// and the annuity conversion from fuel-cost WTP to an implied annual discount
// rate.

#include <cmath>
#include <string>
#include <vector>

#include "refchoice/csv.hpp"
#include "refchoice/modeleval.hpp"

namespace refchoice {

enum class WtpAttribute { fastcharge, range, fuel };

inline std::string to_string(WtpAttribute a) {
  switch (a) {
    case WtpAttribute::fastcharge: return "fastcharge";
    case WtpAttribute::range: return "range";
    case WtpAttribute::fuel: return "fuel";
  }
  throw ValidationError("bad wtp attribute");
}

inline WtpAttribute wtp_attribute_from_string(const std::string& s) {
  if (s == "fastcharge") return WtpAttribute::fastcharge;
  if (s == "range") return WtpAttribute::range;
  if (s == "fuel") return WtpAttribute::fuel;
  throw ValidationError("unknown wtp attribute '" + s + "'");
}

// Reference vehicle and EV values at which marginals are taken. Defaults are
// the reporting conventions: a 10-lac, 800-km, 5-minute, INR-500-per-week
// reference vehicle.
struct EvaluationPoint {
  double icev_price_lacs = 10.0;
  double icev_range_km = 800.0;
  double icev_fast_min = 5.0;
  double icev_weekly_fuel_inr = 500.0;
  double ev_price_lacs = 13.0;
  double ev_range_km = 200.0;
  double ev_fast_min = 30.0;
  double ev_weekly_fuel_inr = 400.0;

  void validate() const {
    for (double x : {icev_price_lacs, icev_range_km, icev_fast_min,
                     icev_weekly_fuel_inr, ev_price_lacs, ev_range_km,
                     ev_fast_min, ev_weekly_fuel_inr})
      if (!(x > 0.0))
        throw ValidationError("evaluation point fields must be positive");
    if (!(ev_price_lacs > icev_price_lacs))
      throw ValidationError("evaluation point: EV price must exceed reference");
  }
};

// Demographic profile, or none (latents at zero) for the variants without
// interactions.
struct WtpProfile {
  bool none = true;
  Demographics demographics;
  std::string label = "none";

  static WtpProfile from_demographics(Demographics d, std::string label) {
    WtpProfile p;
    p.none = false;
    p.demographics = std::move(d);
    p.label = std::move(label);
    return p;
  }
};

inline LatentVector profile_latent_means(const ModelSpec& spec,
                                         const ParamTable& table,
                                         const ParamValues& theta,
                                         const WtpProfile& profile) {
  if (profile.none) return {0.0, 0.0, 0.0};
  return latent_means(spec, table, theta, profile.demographics);
}

namespace detail {

inline constexpr double kRefDiffGuard = 1e-6;

// EV-minus-ICEV value of each attribute expression at the evaluation point,
// and the chain factor d(expression)/d(raw EV attribute): ranges enter as
// logs, so their marginals pick up 1/range and are reported per km.
struct PointDiff {
  double diff;   // EV expression - ICEV expression
  double chain;  // d(EV expression) / d(EV raw attribute unit)
};

inline PointDiff point_diff(const EvaluationPoint& p, Attr attr) {
  switch (attr) {
    case Attr::price_lacs:
      return {p.ev_price_lacs - p.icev_price_lacs, 1.0};
    case Attr::log_range_100km:
      return {std::log(p.ev_range_km / p.icev_range_km), 1.0 / p.ev_range_km};
    case Attr::weekly_fuel_inr100:
      return {(p.ev_weekly_fuel_inr - p.icev_weekly_fuel_inr) / 100.0, 1.0};
    case Attr::fast_charge_min:
      return {p.ev_fast_min - p.icev_fast_min, 1.0};
    default:
      throw ValidationError("wtp: unsupported attribute expression");
  }
}

// d/dd of sign(d)|d|^alpha, positive everywhere off the origin.
inline double ref_power_slope(double d, double alpha, Attr attr) {
  if (alpha == 1.0) return 1.0;
  if (std::fabs(d) < kRefDiffGuard)
    throw ValidationError(
        "marginal utility of " + to_string(attr) +
        " is evaluated inside the reference-point singularity guard");
  return alpha * std::pow(std::fabs(d), alpha - 1.0);
}

inline Attr wtp_target(WtpAttribute a) {
  switch (a) {
    case WtpAttribute::fastcharge: return Attr::fast_charge_min;
    case WtpAttribute::range: return Attr::log_range_100km;
    case WtpAttribute::fuel: return Attr::weekly_fuel_inr100;
  }
  throw ValidationError("bad wtp attribute");
}

// Derivative of the utility difference with respect to the raw EV value of
// target (holding the reference vehicle fixed).
inline double marginal_wrt_ev_attr(const ModelSpec& spec,
                                   const ParamTable& table,
                                   const ParamValues& theta,
                                   const EvaluationPoint& point, Attr target,
                                   const LatentVector& xbar) {
  const PointDiff pd = point_diff(point, target);
  double deriv = 0.0;
  for (const auto& t : spec.terms) {
    if (t.attr != target) continue;
    const double alt_sign = t.alt == Alt::ev ? 1.0 : -1.0;
    switch (t.kind) {
      case Term::Kind::ref_power: {
        // term = beta * u(s * diff); d/dx_ev = beta * u'(d) * s * chain
        const double s =
            t.direction == DiffDirection::ev_minus_icev ? 1.0 : -1.0;
        const double slope = ref_power_slope(
            s * pd.diff, theta[table.index(t.curvature)], target);
        deriv += theta[table.index(t.coef)] * slope * s * pd.chain;
        break;
      }
      case Term::Kind::linear:
        if (t.alt == Alt::ev) deriv += theta[table.index(t.coef)] * pd.chain;
        break;
      case Term::Kind::latent_interaction: {
        // diff-mode expressions move with the EV value regardless of which
        // alternative carries the term; own-mode only on the EV side
        const double dexpr =
            t.mode == ExprMode::diff ? pd.chain
            : t.alt == Alt::ev       ? pd.chain
                                     : 0.0;
        deriv += alt_sign * theta[table.index(t.coef)] * xbar[t.latent] * dexpr;
        break;
      }
      default:
        break;
    }
  }
  return deriv;
}

}  // namespace detail

// Derivative of the utility difference with respect to one EV attribute at
// the evaluation point, latents at the profile means. Units: per km (range),
// per INR-100/week (fuel), per minute (fast charging).
inline double marginal_utility(const ModelSpec& spec, const ParamTable& table,
                               const ParamValues& theta,
                               const EvaluationPoint& point, WtpAttribute attr,
                               const WtpProfile& profile) {
  point.validate();
  const auto xbar = profile_latent_means(spec, table, theta, profile);
  return detail::marginal_wrt_ev_attr(spec, table, theta, point,
                                      detail::wtp_target(attr), xbar);
}

// Derivative with respect to the EV purchase price, per lac.
inline double price_marginal_utility(const ModelSpec& spec,
                                     const ParamTable& table,
                                     const ParamValues& theta,
                                     const EvaluationPoint& point,
                                     const WtpProfile& profile) {
  point.validate();
  const auto xbar = profile_latent_means(spec, table, theta, profile);
  return detail::marginal_wrt_ev_attr(spec, table, theta, point,
                                      Attr::price_lacs, xbar);
}

// Price change (INR lacs) that exactly offsets a unit_change of the
// attribute; positive for improvements.
inline double wtp(const ModelSpec& spec, const ParamTable& table,
                  const ParamValues& theta, const EvaluationPoint& point,
                  WtpAttribute attr, double unit_change,
                  const WtpProfile& profile) {
  const double du =
      marginal_utility(spec, table, theta, point, attr, profile) * unit_change;
  const double dprice =
      price_marginal_utility(spec, table, theta, point, profile);
  if (dprice == 0.0)
    throw ValidationError("wtp: price marginal utility is zero");
  return -du / dprice;
}

// ---- curves -------------------------------------------------------------------

struct WtpGrid {
  std::vector<double> ev_price_lacs{11.0, 13.0, 15.0};
  std::vector<double> attr_values;  // km / weekly INR / minutes
  EvaluationPoint base;             // reference profile and off-grid values
};

struct WtpCurveRow {
  double ev_price_lacs;
  double attr_value;
  double wtp_thousand_inr;
};

// Conventional unit changes: 10 minutes less fast charging, 100 km more
// range, INR 100 less weekly operating cost.
inline double wtp_unit_change(WtpAttribute a) {
  switch (a) {
    case WtpAttribute::fastcharge: return -10.0;
    case WtpAttribute::range: return 100.0;
    case WtpAttribute::fuel: return -1.0;
  }
  throw ValidationError("bad wtp attribute");
}

inline std::vector<WtpCurveRow> wtp_curve(const ModelSpec& spec,
                                          const ParamTable& table,
                                          const ParamValues& theta,
                                          WtpAttribute attr, const WtpGrid& grid,
                                          const WtpProfile& profile) {
  std::vector<double> attr_values = grid.attr_values;
  if (attr_values.empty()) {
    switch (attr) {
      case WtpAttribute::fastcharge: attr_values = {30.0, 60.0, 90.0}; break;
      case WtpAttribute::range: attr_values = {150.0, 200.0, 250.0, 300.0,
                                               400.0, 500.0}; break;
      case WtpAttribute::fuel: attr_values = {50.0, 100.0, 200.0, 300.0,
                                              400.0}; break;
    }
  }
  std::vector<WtpCurveRow> rows;
  rows.reserve(grid.ev_price_lacs.size() * attr_values.size());
  for (double price : grid.ev_price_lacs) {
    for (double av : attr_values) {
      EvaluationPoint p = grid.base;
      p.ev_price_lacs = price;
      switch (attr) {
        case WtpAttribute::fastcharge: p.ev_fast_min = av; break;
        case WtpAttribute::range: p.ev_range_km = av; break;
        case WtpAttribute::fuel: p.ev_weekly_fuel_inr = av; break;
      }
      const double w =
          wtp(spec, table, theta, p, attr, wtp_unit_change(attr), profile);
      rows.push_back({price, av, w * 100.0});  // lacs -> thousand INR
    }
  }
  return rows;
}

inline std::string wtp_curve_csv(const std::string& model,
                                 const std::string& profile_label,
                                 WtpAttribute attr,
                                 const std::vector<WtpCurveRow>& rows) {
  CsvWriter w({"model", "profile", "attribute", "ev_price_lacs", "attr_value",
               "wtp_thousand_inr"});
  for (const auto& r : rows)
    w.append_row({model, profile_label, to_string(attr),
                  format_double(r.ev_price_lacs), format_double(r.attr_value),
                  format_double(r.wtp_thousand_inr)});
  return w.str();
}

// ---- discount rate --------------------------------------------------------------

// Annual discount rate implied by paying wtp_price now for weekly_saving over
// the vehicle's life: solve the present-value-of-annuity identity for the
// weekly rate, then compound to a year.
inline double discount_rate(double wtp_price_inr, double weekly_saving_inr,
                            int years) {
  if (!(wtp_price_inr > 0.0) || !(weekly_saving_inr > 0.0) || years <= 0)
    throw ValidationError("discount_rate: inputs must be positive");
  const double n = years * 52.0;
  if (wtp_price_inr >= weekly_saving_inr * n) {
    if (wtp_price_inr == weekly_saving_inr * n) return 0.0;
    // paying more than the undiscounted stream: zero-rate boundary
    return 0.0;
  }
  auto residual = [&](double i) {
    return weekly_saving_inr * (1.0 - std::pow(1.0 + i, -n)) / i -
           wtp_price_inr;
  };
  double lo = 1e-12, hi = 10.0;
  if (!(residual(lo) > 0.0) || !(residual(hi) < 0.0))
    throw ValidationError("discount_rate: no sign change in bracket");
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::fabs(r) <= 1e-6) {
      lo = hi = mid;
      break;
    }
    (r > 0.0 ? lo : hi) = mid;
  }
  const double weekly = 0.5 * (lo + hi);
  return std::pow(1.0 + weekly, 52.0) - 1.0;
}

}  // namespace refchoice
