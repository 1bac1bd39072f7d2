#pragma once

// Shared fixtures for the test suites.

#include <string>

#include "refchoice/datamodel.hpp"
#include "refchoice/design.hpp"

namespace testsupport {

inline refchoice::Respondent sample_respondent(std::int64_t id = 1) {
  refchoice::Respondent r;
  r.respondent_id = id;
  r.demographics = {"mumbai", "male", "couple", "5_to_10_lacs", "bachelors",
                    "private"};
  r.reported_icev_price_lacs = 8.0;
  r.weekly_km = 230.0;
  r.indicators = {4, 4, 4, 3, 3, 3, 4, 4, 3, 3, 3};
  return r;
}

// The scenario shown to survey participants as the worked example: an 8-lac
// reference vehicle against a 30%-markup EV.
inline refchoice::ChoiceTask sample_task(std::int64_t id = 1) {
  refchoice::ChoiceTask t;
  t.task_id = id;
  t.icev.price_lacs = 8.0;
  t.icev.running_cost_inr_km = 5.0;
  t.icev.range_km = 800.0;
  t.icev.fast_charge_min = 10.0;
  t.icev.charger_spacing_km = 1.0;
  t.ev.price_lacs = 10.4;
  t.ev.running_cost_inr_km = 0.5;
  t.ev.range_km = 200.0;
  t.ev.slow_charge_hr = 10.0;
  t.ev.fast_charge_min = 90.0;
  t.ev.charger_spacing_km = 7.0;
  t.ev.reserved_parking = false;
  t.ev.special_lane = true;
  return t;
}

inline refchoice::Dataset tiny_dataset() {
  refchoice::Dataset ds;
  auto r1 = sample_respondent(1);
  auto bank = refchoice::generate_bank(refchoice::DesignSpec{}, 11);
  r1.tasks = refchoice::assign_tasks(bank, refchoice::DesignSpec{}, r1, 11);
  for (auto& t : r1.tasks) t.chosen = refchoice::Chosen::ev;
  auto r2 = sample_respondent(2);
  r2.demographics = {"calcutta", "female", "single_and_others", "20_lacs_plus",
                     "masters_plus", "self_employed"};
  r2.reported_icev_price_lacs = 14.5;
  r2.weekly_km = 120.0;
  r2.indicators = {5, 4, 5, 2, 2, 3, 4, 5, 3, 4, 2};
  r2.tasks = refchoice::assign_tasks(bank, refchoice::DesignSpec{}, r2, 11);
  for (auto& t : r2.tasks) t.chosen = refchoice::Chosen::icev;
  ds.respondents = {r1, r2};
  ds.validate();
  return ds;
}

}  // namespace testsupport
