#pragma once

// Core records for respondents, choice tasks and indicator responses.
// Everything is immutable after load and safe to share across workers.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "refchoice/errors.hpp"

namespace refchoice {

inline constexpr int kNumIndicators = 11;
inline constexpr int kLikertLevels = 5;
inline constexpr const char* kDatasetSchemaVersion = "1";

// Closed demographic vocabularies. The first token of each field is the
// reference (base) category of the structural regressions; unknown tokens are
// load errors rather than silent base-mapping.
namespace vocab {

inline const std::vector<std::string>& location() {
  static const std::vector<std::string> v{"delhi_and_others", "mumbai",
                                          "bangalore", "chennai", "calcutta"};
  return v;
}
inline const std::vector<std::string>& gender() {
  static const std::vector<std::string> v{"male", "female"};
  return v;
}
inline const std::vector<std::string>& marital() {
  static const std::vector<std::string> v{"single_and_others", "couple",
                                          "couple_with_kid"};
  return v;
}
inline const std::vector<std::string>& income_band() {
  static const std::vector<std::string> v{"20_lacs_plus", "below_5_lacs",
                                          "5_to_10_lacs", "10_to_15_lacs",
                                          "15_to_20_lacs"};
  return v;
}
inline const std::vector<std::string>& education() {
  static const std::vector<std::string> v{"masters_plus", "below_bachelors",
                                          "bachelors"};
  return v;
}
inline const std::vector<std::string>& employment() {
  static const std::vector<std::string> v{"private", "government",
                                          "self_employed", "unemployed"};
  return v;
}

inline const std::vector<std::string>& field(const std::string& name) {
  if (name == "location") return location();
  if (name == "gender") return gender();
  if (name == "marital") return marital();
  if (name == "income_band") return income_band();
  if (name == "education") return education();
  if (name == "employment") return employment();
  throw ValidationError("unknown demographic field: " + name);
}

inline const std::vector<std::string>& fields() {
  static const std::vector<std::string> v{"location",   "gender",
                                          "marital",    "income_band",
                                          "education",  "employment"};
  return v;
}

inline bool contains(const std::vector<std::string>& levels,
                     const std::string& token) {
  for (const auto& l : levels)
    if (l == token) return true;
  return false;
}

}  // namespace vocab

struct Demographics {
  std::string location;
  std::string gender;
  std::string marital;
  std::string income_band;
  std::string education;
  std::string employment;

  const std::string& level(const std::string& field_name) const {
    if (field_name == "location") return location;
    if (field_name == "gender") return gender;
    if (field_name == "marital") return marital;
    if (field_name == "income_band") return income_band;
    if (field_name == "education") return education;
    if (field_name == "employment") return employment;
    throw ValidationError("unknown demographic field: " + field_name);
  }

  void validate(const std::string& who) const {
    for (const auto& f : vocab::fields())
      if (!vocab::contains(vocab::field(f), level(f)))
        throw ValidationError(who + ": unknown " + f + " level '" + level(f) +
                              "'");
  }

  bool operator==(const Demographics&) const = default;
};

// One alternative's attribute bundle. Slow charging does not exist for the
// combustion alternative and is kept absent rather than zero.
struct AlternativeProfile {
  double price_lacs = 0.0;          // on-road price, INR lacs
  double running_cost_inr_km = 0.0; // INR per km
  double range_km = 0.0;
  std::optional<double> slow_charge_hr;
  double fast_charge_min = 0.0;
  double charger_spacing_km = 0.0;
  bool reserved_parking = false;
  bool special_lane = false;

  void validate(const std::string& who) const {
    if (!(price_lacs > 0.0))
      throw ValidationError(who + ": price must be positive");
    if (!(range_km > 0.0))
      throw ValidationError(who + ": range must be positive");
    if (!(fast_charge_min > 0.0))
      throw ValidationError(who + ": fast-charge time must be positive");
    if (!(running_cost_inr_km > 0.0))
      throw ValidationError(who + ": running cost must be positive");
  }

  bool operator==(const AlternativeProfile&) const = default;
};

enum class Chosen { unset, ev, icev };

inline std::string to_string(Chosen c) {
  switch (c) {
    case Chosen::ev: return "EV";
    case Chosen::icev: return "ICEV";
    default: return "";
  }
}

inline Chosen chosen_from_string(const std::string& s) {
  if (s.empty()) return Chosen::unset;
  if (s == "EV" || s == "ev") return Chosen::ev;
  if (s == "ICEV" || s == "icev") return Chosen::icev;
  throw ValidationError("unknown choice token '" + s + "'");
}

struct ChoiceTask {
  std::int64_t task_id = 0;
  AlternativeProfile icev;
  AlternativeProfile ev;
  Chosen chosen = Chosen::unset;

  // The relations every presented scenario satisfies: the EV is dearer,
  // shorter-ranged, slower to fast-charge, cheaper to run and has sparser
  // chargers than the reference vehicle.
  void validate(const std::string& who) const {
    icev.validate(who + " ICEV");
    ev.validate(who + " EV");
    if (!(ev.price_lacs > icev.price_lacs))
      throw ValidationError(who + ": EV price must exceed ICEV price");
    if (!(ev.range_km < icev.range_km))
      throw ValidationError(who + ": EV range must be below ICEV range");
    if (!(ev.fast_charge_min > icev.fast_charge_min))
      throw ValidationError(who + ": EV fast charge must exceed ICEV");
    if (!(ev.running_cost_inr_km < icev.running_cost_inr_km))
      throw ValidationError(who + ": EV running cost must be below ICEV");
    if (!(ev.charger_spacing_km > icev.charger_spacing_km))
      throw ValidationError(who + ": EV charger spacing must exceed ICEV");
  }

  bool operator==(const ChoiceTask&) const = default;
};

struct Respondent {
  std::int64_t respondent_id = 0;
  Demographics demographics;
  double reported_icev_price_lacs = 0.0;
  double weekly_km = 0.0;
  std::array<int, kNumIndicators> indicators{};  // ind01..ind11, each 1..5
  std::vector<ChoiceTask> tasks;

  void validate() const {
    const std::string who = "respondent " + std::to_string(respondent_id);
    demographics.validate(who);
    if (!(reported_icev_price_lacs > 0.0))
      throw ValidationError(who + ": reported ICEV price must be positive");
    if (!(weekly_km > 0.0))
      throw ValidationError(who + ": weekly km must be positive");
    for (int i = 0; i < kNumIndicators; ++i)
      if (indicators[i] < 1 || indicators[i] > kLikertLevels)
        throw ValidationError(who + ": ind" + (i < 9 ? "0" : "") +
                              std::to_string(i + 1) + " value " +
                              std::to_string(indicators[i]) +
                              " outside 1..5");
    for (const auto& t : tasks)
      t.validate(who + " task " + std::to_string(t.task_id));
  }

  bool operator==(const Respondent&) const = default;
};

struct Dataset {
  std::vector<Respondent> respondents;
  std::string schema_version = kDatasetSchemaVersion;

  void validate() const {
    std::unordered_set<std::int64_t> seen;
    for (const auto& r : respondents) {
      if (!seen.insert(r.respondent_id).second)
        throw ValidationError("duplicate respondent_id " +
                              std::to_string(r.respondent_id));
      r.validate();
    }
  }

  bool operator==(const Dataset&) const = default;
};

// Weekly operating cost in INR hundreds, the unit the fuel-cost utility term
// is expressed in.
inline double weekly_fuel_cost(double running_cost_inr_km, double weekly_km) {
  if (!(running_cost_inr_km > 0.0))
    throw ValidationError("weekly_fuel_cost: running cost must be positive");
  if (!(weekly_km > 0.0))
    throw ValidationError("weekly_fuel_cost: weekly km must be positive");
  return running_cost_inr_km * weekly_km / 100.0;
}

}  // namespace refchoice
