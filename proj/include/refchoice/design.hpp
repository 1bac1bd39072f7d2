#pragma once

// Randomized choice-experiment generator: a balanced scenario bank where each
// attribute level appears equally often, with EV price expressed as a markup
// and materialized only when a task is pivoted on a respondent's reported
// price.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refchoice/csv.hpp"
#include "refchoice/datamodel.hpp"
#include "refchoice/prng.hpp"

namespace refchoice {

struct DesignSpec {
  int bank_size = 24;
  int tasks_per_respondent = 3;
  std::vector<double> ev_price_markup_pct{30, 45, 60};
  std::vector<double> icev_run_cost_inr_km{3, 4, 5};
  std::vector<double> ev_run_cost_inr_km{0.5, 1.0, 1.5};
  std::vector<double> icev_range_km{600, 800};
  std::vector<double> ev_range_km{150, 200, 250};
  std::vector<double> ev_slow_charge_hr{6, 8, 10};
  std::vector<double> ev_fast_charge_min{30, 60, 90};
  std::vector<double> icev_fast_charge_min{5, 10};
  std::vector<double> ev_spacing_km{3, 5, 7};
  std::vector<double> icev_spacing_km{1};
  std::vector<bool> ev_parking{true, false};
  std::vector<bool> ev_lane{true, false};

  void validate() const {
    auto check = [&](std::size_t n, const char* name) {
      if (n == 0) throw ValidationError(std::string("design: empty level set ") + name);
      if (bank_size % static_cast<int>(n) != 0)
        throw ValidationError(std::string("design: bank_size not divisible by |") +
                              name + "|");
    };
    if (bank_size <= 0 || tasks_per_respondent <= 0 ||
        tasks_per_respondent > bank_size)
      throw ValidationError("design: bad bank_size/tasks_per_respondent");
    check(ev_price_markup_pct.size(), "ev_price_markup_pct");
    check(icev_run_cost_inr_km.size(), "icev_run_cost_inr_km");
    check(ev_run_cost_inr_km.size(), "ev_run_cost_inr_km");
    check(icev_range_km.size(), "icev_range_km");
    check(ev_range_km.size(), "ev_range_km");
    check(ev_slow_charge_hr.size(), "ev_slow_charge_hr");
    check(ev_fast_charge_min.size(), "ev_fast_charge_min");
    check(icev_fast_charge_min.size(), "icev_fast_charge_min");
    check(ev_spacing_km.size(), "ev_spacing_km");
    check(icev_spacing_km.size(), "icev_spacing_km");
    check(ev_parking.size(), "ev_parking");
    check(ev_lane.size(), "ev_lane");
  }
};

inline void to_json(nlohmann::json& j, const DesignSpec& s) {
  j = nlohmann::json{{"bank_size", s.bank_size},
                     {"tasks_per_respondent", s.tasks_per_respondent},
                     {"ev_price_markup_pct", s.ev_price_markup_pct},
                     {"icev_run_cost_inr_km", s.icev_run_cost_inr_km},
                     {"ev_run_cost_inr_km", s.ev_run_cost_inr_km},
                     {"icev_range_km", s.icev_range_km},
                     {"ev_range_km", s.ev_range_km},
                     {"ev_slow_charge_hr", s.ev_slow_charge_hr},
                     {"ev_fast_charge_min", s.ev_fast_charge_min},
                     {"icev_fast_charge_min", s.icev_fast_charge_min},
                     {"ev_spacing_km", s.ev_spacing_km},
                     {"icev_spacing_km", s.icev_spacing_km},
                     {"ev_parking", s.ev_parking},
                     {"ev_lane", s.ev_lane}};
}

inline void from_json(const nlohmann::json& j, DesignSpec& s) {
  s = DesignSpec{};
  if (j.contains("bank_size")) j.at("bank_size").get_to(s.bank_size);
  if (j.contains("tasks_per_respondent"))
    j.at("tasks_per_respondent").get_to(s.tasks_per_respondent);
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  opt("ev_price_markup_pct", s.ev_price_markup_pct);
  opt("icev_run_cost_inr_km", s.icev_run_cost_inr_km);
  opt("ev_run_cost_inr_km", s.ev_run_cost_inr_km);
  opt("icev_range_km", s.icev_range_km);
  opt("ev_range_km", s.ev_range_km);
  opt("ev_slow_charge_hr", s.ev_slow_charge_hr);
  opt("ev_fast_charge_min", s.ev_fast_charge_min);
  opt("icev_fast_charge_min", s.icev_fast_charge_min);
  opt("ev_spacing_km", s.ev_spacing_km);
  opt("icev_spacing_km", s.icev_spacing_km);
  opt("ev_parking", s.ev_parking);
  opt("ev_lane", s.ev_lane);
}

// One scenario template: everything but prices, plus the EV markup.
struct ScenarioTemplate {
  double ev_price_markup_pct = 0.0;
  double icev_run_cost = 0.0;
  double ev_run_cost = 0.0;
  double icev_range = 0.0;
  double ev_range = 0.0;
  double ev_slow_hr = 0.0;
  double ev_fast_min = 0.0;
  double icev_fast_min = 0.0;
  double ev_spacing = 0.0;
  double icev_spacing = 0.0;
  bool ev_parking = false;
  bool ev_lane = false;
};

namespace detail {

// A column where each level occupies bank_size/|levels| slots, permuted by a
// per-attribute substream. Marginal balance is exact for every seed.
template <typename T>
std::vector<T> balanced_column(const std::vector<T>& levels, int bank_size,
                               std::uint64_t seed, std::uint64_t attr_tag) {
  std::vector<T> column;
  column.reserve(bank_size);
  const int reps = bank_size / static_cast<int>(levels.size());
  for (const T& level : levels)
    for (int r = 0; r < reps; ++r) column.push_back(level);
  auto rng = substream(seed, 0x62616e6bull /*bank*/, attr_tag);
  shuffle_inplace(column, rng);
  return column;
}

}  // namespace detail

inline std::vector<ScenarioTemplate> generate_bank(const DesignSpec& spec,
                                                   std::uint64_t seed) {
  spec.validate();
  const int n = spec.bank_size;
  auto markup = detail::balanced_column(spec.ev_price_markup_pct, n, seed, 1);
  auto icev_rc = detail::balanced_column(spec.icev_run_cost_inr_km, n, seed, 2);
  auto ev_rc = detail::balanced_column(spec.ev_run_cost_inr_km, n, seed, 3);
  auto icev_rng = detail::balanced_column(spec.icev_range_km, n, seed, 4);
  auto ev_rng = detail::balanced_column(spec.ev_range_km, n, seed, 5);
  auto ev_slow = detail::balanced_column(spec.ev_slow_charge_hr, n, seed, 6);
  auto ev_fast = detail::balanced_column(spec.ev_fast_charge_min, n, seed, 7);
  auto icev_fast = detail::balanced_column(spec.icev_fast_charge_min, n, seed, 8);
  auto ev_sp = detail::balanced_column(spec.ev_spacing_km, n, seed, 9);
  auto icev_sp = detail::balanced_column(spec.icev_spacing_km, n, seed, 10);
  auto parking = detail::balanced_column(spec.ev_parking, n, seed, 11);
  auto lane = detail::balanced_column(spec.ev_lane, n, seed, 12);

  std::vector<ScenarioTemplate> bank(n);
  for (int i = 0; i < n; ++i) {
    bank[i] = ScenarioTemplate{markup[i],   icev_rc[i],  ev_rc[i],
                               icev_rng[i], ev_rng[i],   ev_slow[i],
                               ev_fast[i],  icev_fast[i], ev_sp[i],
                               icev_sp[i],  parking[i],  lane[i]};
  }
  return bank;
}

// Materialize a template against a reported reference price.
inline ChoiceTask make_task(const ScenarioTemplate& t, std::int64_t task_id,
                            double reported_icev_price_lacs) {
  ChoiceTask task;
  task.task_id = task_id;
  task.icev.price_lacs = reported_icev_price_lacs;
  task.icev.running_cost_inr_km = t.icev_run_cost;
  task.icev.range_km = t.icev_range;
  task.icev.fast_charge_min = t.icev_fast_min;
  task.icev.charger_spacing_km = t.icev_spacing;
  task.ev.price_lacs =
      reported_icev_price_lacs * (1.0 + t.ev_price_markup_pct / 100.0);
  task.ev.running_cost_inr_km = t.ev_run_cost;
  task.ev.range_km = t.ev_range;
  task.ev.slow_charge_hr = t.ev_slow_hr;
  task.ev.fast_charge_min = t.ev_fast_min;
  task.ev.charger_spacing_km = t.ev_spacing;
  task.ev.reserved_parking = t.ev_parking;
  task.ev.special_lane = t.ev_lane;
  return task;
}

// Draw tasks_per_respondent distinct scenarios without replacement and pivot
// them on the respondent's reported price. Task ids are 1-based scenario
// indices into the bank.
inline std::vector<ChoiceTask> assign_tasks(
    const std::vector<ScenarioTemplate>& bank, const DesignSpec& spec,
    const Respondent& respondent, std::uint64_t seed) {
  if (!(respondent.reported_icev_price_lacs > 0.0))
    throw ValidationError("assign_tasks: respondent " +
                          std::to_string(respondent.respondent_id) +
                          " has non-positive reported price");
  std::vector<std::size_t> idx(bank.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto rng = substream(seed, 0x7461736bull /*task*/,
                       static_cast<std::uint64_t>(respondent.respondent_id));
  // partial Fisher-Yates: first k entries are a without-replacement draw
  const int k = spec.tasks_per_respondent;
  for (int i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_below(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<ChoiceTask> tasks;
  tasks.reserve(k);
  for (int i = 0; i < k; ++i) {
    ChoiceTask t = make_task(bank[idx[i]], static_cast<std::int64_t>(idx[i] + 1),
                             respondent.reported_icev_price_lacs);
    t.validate("respondent " + std::to_string(respondent.respondent_id) +
               " task " + std::to_string(t.task_id));
    tasks.push_back(std::move(t));
  }
  return tasks;
}

inline std::string bank_csv(const std::vector<ScenarioTemplate>& bank) {
  CsvWriter w({"scenario_id", "ev_price_markup_pct", "icev_run_cost",
               "ev_run_cost", "icev_range_km", "ev_range_km", "ev_slow_hr",
               "ev_fast_min", "icev_fast_min", "ev_spacing_km",
               "icev_spacing_km", "ev_parking", "ev_lane"});
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& t = bank[i];
    w.append_row({std::to_string(i + 1), format_double(t.ev_price_markup_pct),
                  format_double(t.icev_run_cost), format_double(t.ev_run_cost),
                  format_double(t.icev_range), format_double(t.ev_range),
                  format_double(t.ev_slow_hr), format_double(t.ev_fast_min),
                  format_double(t.icev_fast_min), format_double(t.ev_spacing),
                  format_double(t.icev_spacing), t.ev_parking ? "yes" : "no",
                  t.ev_lane ? "yes" : "no"});
  }
  return w.str();
}

}  // namespace refchoice
