#pragma once

// Declarative description of the two-alternative utility and the latent
// attitude system: term algebra, structural regression entries, ordinal
// measurement maps, error correlations and constraints. Model variants differ
// only by their constraint set, which keeps the nesting relations exact.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refchoice/datamodel.hpp"

namespace refchoice {

inline constexpr int kNumLatents = 3;
inline constexpr int kNumThresholds = 4;  // first is pinned at zero

enum class Alt { ev, icev };

// Closed set of attribute expressions a term may reference.
enum class Attr {
  price_lacs,
  log_range_100km,
  weekly_fuel_inr100,
  fast_charge_min,
  spacing_km,
  slow_charge_hr,
  parking,
  lane,
};

enum class ExprMode { own, diff };  // own alternative's value, or EV - ICEV

enum class DiffDirection { ev_minus_icev, icev_minus_ev };

struct Term {
  enum class Kind {
    constant,
    linear,
    ref_power,
    dummy,
    latent_main,
    latent_interaction,
  };
  Kind kind{};
  Alt alt = Alt::ev;  // ref_power terms always live on the EV side
  Attr attr{};
  ExprMode mode = ExprMode::own;                       // latent_interaction
  DiffDirection direction = DiffDirection::ev_minus_icev;  // ref_power
  int indicator = -1;  // dummy: 0-based indicator index
  int level = 0;       // dummy level carrying this coefficient
  int base = 0;        // dummy base level
  int latent = -1;     // latent_main / latent_interaction
  std::string coef;
  std::string curvature;  // ref_power only

  bool operator==(const Term&) const = default;
};

struct StructuralEntry {
  int latent = -1;
  std::string field;
  std::string level;
  std::string coef;
  bool operator==(const StructuralEntry&) const = default;
};

struct MeasurementMap {
  int indicator = -1;                   // 0-based
  std::map<int, std::string> loadings;  // latent index -> coefficient name
  std::string intercept;
  std::string threshold_block;  // expands to <block>_2 .. <block>_4
  bool operator==(const MeasurementMap&) const = default;
};

struct CorrelationEntry {
  int latent_a = -1, latent_b = -1;  // a < b
  std::string coef;
  bool operator==(const CorrelationEntry&) const = default;
};

struct Constraint {
  std::string name;
  double value = 0.0;
  bool operator==(const Constraint&) const = default;
};

struct SignAnchor {
  int indicator = -1;
  int sign = -1;  // expected sign of that indicator's loading
  bool operator==(const SignAnchor&) const = default;
};

struct ModelSpec {
  std::string name;
  std::vector<std::string> latents;
  std::vector<Term> terms;
  std::vector<StructuralEntry> structural;
  std::vector<MeasurementMap> measurement;
  std::vector<CorrelationEntry> correlations;
  std::vector<Constraint> constraints;
  std::map<std::string, SignAnchor> sign_anchors;  // keyed by latent name

  bool operator==(const ModelSpec&) const = default;

  int latent_index(const std::string& l) const {
    for (int i = 0; i < static_cast<int>(latents.size()); ++i)
      if (latents[i] == l) return i;
    throw ValidationError("unknown latent '" + l + "'");
  }

  bool is_fixed(const std::string& coef) const {
    for (const auto& c : constraints)
      if (c.name == coef) return true;
    return false;
  }

  void validate() const {
    if (latents.size() != kNumLatents)
      throw ValidationError("model '" + name + "': expected 3 latents");
    std::set<std::string> lat(latents.begin(), latents.end());
    if (lat.size() != latents.size())
      throw ValidationError("model '" + name + "': duplicate latent names");

    std::map<int, int> dummy_base;
    for (const auto& t : terms) {
      if (t.coef.empty()) throw ValidationError("term without coefficient");
      switch (t.kind) {
        case Term::Kind::ref_power:
          if (t.curvature.empty())
            throw ValidationError("ref_power term '" + t.coef +
                                  "' without curvature parameter");
          if (t.alt != Alt::ev)
            throw ValidationError("ref_power terms are EV-side only");
          break;
        case Term::Kind::dummy: {
          if (t.indicator < 0 || t.indicator >= kNumIndicators)
            throw ValidationError("dummy term indicator out of range");
          if (t.level < 1 || t.level > kLikertLevels || t.base < 1 ||
              t.base > kLikertLevels || t.level == t.base)
            throw ValidationError("dummy term level/base invalid");
          auto [it, inserted] = dummy_base.emplace(t.indicator, t.base);
          if (!inserted && it->second != t.base)
            throw ValidationError("inconsistent dummy base for indicator");
          break;
        }
        case Term::Kind::latent_main:
        case Term::Kind::latent_interaction:
          if (t.latent < 0 || t.latent >= kNumLatents)
            throw ValidationError("latent index out of range in term '" +
                                  t.coef + "'");
          break;
        default:
          break;
      }
    }

    std::set<int> seen_ind;
    for (const auto& m : measurement) {
      if (m.indicator < 0 || m.indicator >= kNumIndicators)
        throw ValidationError("measurement indicator out of range");
      if (!seen_ind.insert(m.indicator).second)
        throw ValidationError("indicator measured twice");
      if (m.loadings.empty())
        throw ValidationError("measurement without loadings");
      for (const auto& [r, name] : m.loadings)
        if (r < 0 || r >= kNumLatents)
          throw ValidationError("measurement loading latent out of range");
      if (m.intercept.empty() || m.threshold_block.empty())
        throw ValidationError("measurement needs intercept and thresholds");
    }
    if (seen_ind.size() != kNumIndicators)
      throw ValidationError("model '" + name + "': every indicator ind01..ind" +
                            std::to_string(kNumIndicators) +
                            " must have a measurement map");

    for (const auto& s : structural) {
      if (s.latent < 0 || s.latent >= kNumLatents)
        throw ValidationError("structural latent out of range");
      const auto& levels = vocab::field(s.field);
      if (!vocab::contains(levels, s.level))
        throw ValidationError("structural entry references unknown level '" +
                              s.level + "' of " + s.field);
      if (s.level == levels.front())
        throw ValidationError("structural entry on base level '" + s.level +
                              "' of " + s.field);
    }

    std::set<std::pair<int, int>> pairs;
    for (const auto& c : correlations) {
      if (c.latent_a < 0 || c.latent_b <= c.latent_a ||
          c.latent_b >= kNumLatents)
        throw ValidationError("correlation entry must have latent_a < latent_b");
      if (!pairs.insert({c.latent_a, c.latent_b}).second)
        throw ValidationError("duplicate correlation entry");
    }
  }
};

// Model A nests inside model B when they agree on everything except that B's
// constraint set is a subset of A's.
inline bool is_constraint_relaxation(const ModelSpec& restricted,
                                     const ModelSpec& relaxed) {
  ModelSpec a = restricted, b = relaxed;
  a.name = b.name = "";
  std::set<std::pair<std::string, double>> ca, cb;
  for (const auto& c : a.constraints) ca.insert({c.name, c.value});
  for (const auto& c : b.constraints) cb.insert({c.name, c.value});
  a.constraints.clear();
  b.constraints.clear();
  if (!(a == b)) return false;
  for (const auto& c : cb)
    if (!ca.count(c)) return false;
  return true;
}

// ---- JSON serialization ----------------------------------------------------

inline std::string to_string(Alt a) { return a == Alt::ev ? "ev" : "icev"; }
inline Alt alt_from_string(const std::string& s) {
  if (s == "ev") return Alt::ev;
  if (s == "icev") return Alt::icev;
  throw ValidationError("unknown alternative '" + s + "'");
}

inline std::string to_string(Attr a) {
  switch (a) {
    case Attr::price_lacs: return "price_lacs";
    case Attr::log_range_100km: return "log_range_100km";
    case Attr::weekly_fuel_inr100: return "weekly_fuel_inr100";
    case Attr::fast_charge_min: return "fast_charge_min";
    case Attr::spacing_km: return "spacing_km";
    case Attr::slow_charge_hr: return "slow_charge_hr";
    case Attr::parking: return "parking";
    case Attr::lane: return "lane";
  }
  throw ValidationError("bad attr");
}

inline Attr attr_from_string(const std::string& s) {
  for (Attr a : {Attr::price_lacs, Attr::log_range_100km,
                 Attr::weekly_fuel_inr100, Attr::fast_charge_min,
                 Attr::spacing_km, Attr::slow_charge_hr, Attr::parking,
                 Attr::lane})
    if (to_string(a) == s) return a;
  throw ValidationError("unknown attribute expression '" + s + "'");
}

inline std::string indicator_name(int i) {
  return std::string("ind") + (i < 9 ? "0" : "") + std::to_string(i + 1);
}

inline int indicator_from_name(const std::string& s) {
  for (int i = 0; i < kNumIndicators; ++i)
    if (indicator_name(i) == s) return i;
  throw ValidationError("unknown indicator '" + s + "'");
}

inline nlohmann::json term_to_json(const Term& t, const ModelSpec& spec) {
  using nlohmann::json;
  switch (t.kind) {
    case Term::Kind::constant:
      return json{{"type", "constant"}, {"alt", to_string(t.alt)},
                  {"coef", t.coef}};
    case Term::Kind::linear:
      return json{{"type", "linear"},
                  {"alt", to_string(t.alt)},
                  {"attr", to_string(t.attr)},
                  {"coef", t.coef}};
    case Term::Kind::ref_power:
      return json{{"type", "ref_power"},
                  {"attr", to_string(t.attr)},
                  {"direction", t.direction == DiffDirection::ev_minus_icev
                                    ? "ev_minus_icev"
                                    : "icev_minus_ev"},
                  {"coef", t.coef},
                  {"curvature", t.curvature}};
    case Term::Kind::dummy:
      return json{{"type", "dummy"},
                  {"alt", to_string(t.alt)},
                  {"indicator", indicator_name(t.indicator)},
                  {"level", t.level},
                  {"base", t.base},
                  {"coef", t.coef}};
    case Term::Kind::latent_main:
      return json{{"type", "latent_main"},
                  {"alt", to_string(t.alt)},
                  {"latent", spec.latents[t.latent]},
                  {"coef", t.coef}};
    case Term::Kind::latent_interaction:
      return json{{"type", "latent_interaction"},
                  {"alt", to_string(t.alt)},
                  {"latent", spec.latents[t.latent]},
                  {"attr", to_string(t.attr)},
                  {"mode", t.mode == ExprMode::own ? "own" : "diff"},
                  {"coef", t.coef}};
  }
  throw ValidationError("bad term kind");
}

inline nlohmann::json spec_to_json(const ModelSpec& spec) {
  using nlohmann::json;
  json j;
  j["name"] = spec.name;
  j["latents"] = spec.latents;
  j["utility_terms"] = json::array();
  for (const auto& t : spec.terms) j["utility_terms"].push_back(term_to_json(t, spec));
  j["structural"] = json::array();
  for (const auto& s : spec.structural)
    j["structural"].push_back(json{{"latent", spec.latents[s.latent]},
                                   {"field", s.field},
                                   {"level", s.level},
                                   {"coef", s.coef}});
  j["measurement"] = json::array();
  for (const auto& m : spec.measurement) {
    json loadings = json::object();
    for (const auto& [r, name] : m.loadings) loadings[spec.latents[r]] = name;
    j["measurement"].push_back(json{{"indicator", indicator_name(m.indicator)},
                                    {"loadings", loadings},
                                    {"intercept", m.intercept},
                                    {"thresholds", m.threshold_block}});
  }
  j["error_correlations"] = json::array();
  for (const auto& c : spec.correlations)
    j["error_correlations"].push_back(
        json{{"latents", {spec.latents[c.latent_a], spec.latents[c.latent_b]}},
             {"coef", c.coef}});
  j["constraints"] = json::array();
  for (const auto& c : spec.constraints)
    j["constraints"].push_back(json{{"fix", c.name}, {"value", c.value}});
  j["sign_anchors"] = json::object();
  for (const auto& [latent, a] : spec.sign_anchors)
    j["sign_anchors"][latent] =
        json{{"indicator", indicator_name(a.indicator)}, {"sign", a.sign}};
  return j;
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.name = j.value("name", "");
  j.at("latents").get_to(spec.latents);
  if (spec.latents.size() != kNumLatents)
    throw ValidationError("model spec must declare 3 latents");

  for (const auto& tj : j.at("utility_terms")) {
    Term t;
    const std::string type = tj.at("type").get<std::string>();
    t.coef = tj.at("coef").get<std::string>();
    if (type == "constant") {
      t.kind = Term::Kind::constant;
      t.alt = alt_from_string(tj.at("alt").get<std::string>());
    } else if (type == "linear") {
      t.kind = Term::Kind::linear;
      t.alt = alt_from_string(tj.at("alt").get<std::string>());
      t.attr = attr_from_string(tj.at("attr").get<std::string>());
    } else if (type == "ref_power") {
      t.kind = Term::Kind::ref_power;
      t.alt = Alt::ev;
      t.attr = attr_from_string(tj.at("attr").get<std::string>());
      const std::string dir = tj.at("direction").get<std::string>();
      if (dir == "ev_minus_icev")
        t.direction = DiffDirection::ev_minus_icev;
      else if (dir == "icev_minus_ev")
        t.direction = DiffDirection::icev_minus_ev;
      else
        throw ValidationError("unknown ref_power direction '" + dir + "'");
      t.curvature = tj.at("curvature").get<std::string>();
    } else if (type == "dummy") {
      t.kind = Term::Kind::dummy;
      t.alt = alt_from_string(tj.at("alt").get<std::string>());
      t.indicator = indicator_from_name(tj.at("indicator").get<std::string>());
      t.level = tj.at("level").get<int>();
      t.base = tj.at("base").get<int>();
    } else if (type == "latent_main") {
      t.kind = Term::Kind::latent_main;
      t.alt = alt_from_string(tj.at("alt").get<std::string>());
      t.latent = spec.latent_index(tj.at("latent").get<std::string>());
    } else if (type == "latent_interaction") {
      t.kind = Term::Kind::latent_interaction;
      t.alt = alt_from_string(tj.at("alt").get<std::string>());
      t.latent = spec.latent_index(tj.at("latent").get<std::string>());
      t.attr = attr_from_string(tj.at("attr").get<std::string>());
      const std::string mode = tj.at("mode").get<std::string>();
      if (mode == "own")
        t.mode = ExprMode::own;
      else if (mode == "diff")
        t.mode = ExprMode::diff;
      else
        throw ValidationError("unknown interaction mode '" + mode + "'");
    } else {
      throw ValidationError("unknown term type '" + type + "'");
    }
    spec.terms.push_back(std::move(t));
  }

  for (const auto& sj : j.at("structural")) {
    StructuralEntry s;
    s.latent = spec.latent_index(sj.at("latent").get<std::string>());
    s.field = sj.at("field").get<std::string>();
    s.level = sj.at("level").get<std::string>();
    s.coef = sj.at("coef").get<std::string>();
    spec.structural.push_back(std::move(s));
  }

  for (const auto& mj : j.at("measurement")) {
    MeasurementMap m;
    m.indicator = indicator_from_name(mj.at("indicator").get<std::string>());
    for (const auto& [latent, name] : mj.at("loadings").items())
      m.loadings[spec.latent_index(latent)] = name.get<std::string>();
    m.intercept = mj.at("intercept").get<std::string>();
    m.threshold_block = mj.at("thresholds").get<std::string>();
    spec.measurement.push_back(std::move(m));
  }

  for (const auto& cj : j.at("error_correlations")) {
    CorrelationEntry c;
    const auto& pair = cj.at("latents");
    c.latent_a = spec.latent_index(pair.at(0).get<std::string>());
    c.latent_b = spec.latent_index(pair.at(1).get<std::string>());
    if (c.latent_a > c.latent_b) std::swap(c.latent_a, c.latent_b);
    c.coef = cj.at("coef").get<std::string>();
    spec.correlations.push_back(std::move(c));
  }

  if (j.contains("constraints"))
    for (const auto& cj : j.at("constraints"))
      spec.constraints.push_back(
          {cj.at("fix").get<std::string>(), cj.at("value").get<double>()});

  if (j.contains("sign_anchors"))
    for (const auto& [latent, aj] : j.at("sign_anchors").items()) {
      spec.latent_index(latent);  // validates the key
      spec.sign_anchors[latent] = SignAnchor{
          indicator_from_name(aj.at("indicator").get<std::string>()),
          aj.at("sign").get<int>()};
    }

  spec.validate();
  return spec;
}

}  // namespace refchoice
