#pragma once

// respondents.csv / tasks.csv readers and writers.
//
// respondents.csv: respondent_id, location, gender, marital, income_band,
//   education, employment, reported_icev_price_lacs, weekly_km, ind01..ind11
// tasks.csv: respondent_id, task_id, icev_price_lacs, icev_run_cost,
//   icev_range_km, icev_fast_min, icev_spacing_km, ev_price_lacs, ev_run_cost,
//   ev_range_km, ev_slow_hr, ev_fast_min, ev_spacing_km, ev_parking, ev_lane,
//   chosen

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "refchoice/csv.hpp"
#include "refchoice/datamodel.hpp"

namespace refchoice {

namespace detail {

inline std::string indicator_column(int i) {  // 0-based index -> "ind01"
  return std::string("ind") + (i < 9 ? "0" : "") + std::to_string(i + 1);
}

inline const std::vector<std::string>& respondent_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"respondent_id", "location",   "gender",
                               "marital",       "income_band", "education",
                               "employment",    "reported_icev_price_lacs",
                               "weekly_km"};
    for (int i = 0; i < kNumIndicators; ++i) c.push_back(indicator_column(i));
    return c;
  }();
  return cols;
}

inline const std::vector<std::string>& task_columns() {
  static const std::vector<std::string> cols{
      "respondent_id", "task_id",       "icev_price_lacs", "icev_run_cost",
      "icev_range_km", "icev_fast_min", "icev_spacing_km", "ev_price_lacs",
      "ev_run_cost",   "ev_range_km",   "ev_slow_hr",      "ev_fast_min",
      "ev_spacing_km", "ev_parking",    "ev_lane",         "chosen"};
  return cols;
}

inline bool parse_yes_no(const CsvTable& t, std::size_t row,
                         const std::string& col, const std::string& file) {
  const std::string& s = t.cell(row, col);
  if (s == "yes") return true;
  if (s == "no") return false;
  throw ParseError(file, t.file_row(row),
                   "column '" + col + "': expected yes/no, got '" + s + "'");
}

}  // namespace detail

inline Dataset load_dataset(const std::string& respondents_file,
                            const std::string& tasks_file) {
  CsvTable rt = CsvTable::from_file(respondents_file);
  rt.require_columns(detail::respondent_columns());
  CsvTable tt = CsvTable::from_file(tasks_file);
  tt.require_columns(detail::task_columns());

  Dataset ds;
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < rt.size(); ++i) {
    Respondent r;
    r.respondent_id = rt.integer(i, "respondent_id");
    r.demographics.location = rt.cell(i, "location");
    r.demographics.gender = rt.cell(i, "gender");
    r.demographics.marital = rt.cell(i, "marital");
    r.demographics.income_band = rt.cell(i, "income_band");
    r.demographics.education = rt.cell(i, "education");
    r.demographics.employment = rt.cell(i, "employment");
    r.reported_icev_price_lacs = rt.num(i, "reported_icev_price_lacs");
    r.weekly_km = rt.num(i, "weekly_km");
    for (int j = 0; j < kNumIndicators; ++j)
      r.indicators[j] =
          static_cast<int>(rt.integer(i, detail::indicator_column(j)));
    if (index.count(r.respondent_id))
      throw ValidationError("duplicate respondent_id " +
                            std::to_string(r.respondent_id) + " in " +
                            respondents_file);
    index[r.respondent_id] = ds.respondents.size();
    ds.respondents.push_back(std::move(r));
  }

  for (std::size_t i = 0; i < tt.size(); ++i) {
    const std::int64_t rid = tt.integer(i, "respondent_id");
    auto it = index.find(rid);
    if (it == index.end())
      throw ParseError(tasks_file, tt.file_row(i),
                       "task references unknown respondent_id " +
                           std::to_string(rid));
    ChoiceTask task;
    task.task_id = tt.integer(i, "task_id");
    task.icev.price_lacs = tt.num(i, "icev_price_lacs");
    task.icev.running_cost_inr_km = tt.num(i, "icev_run_cost");
    task.icev.range_km = tt.num(i, "icev_range_km");
    task.icev.fast_charge_min = tt.num(i, "icev_fast_min");
    task.icev.charger_spacing_km = tt.num(i, "icev_spacing_km");
    task.ev.price_lacs = tt.num(i, "ev_price_lacs");
    task.ev.running_cost_inr_km = tt.num(i, "ev_run_cost");
    task.ev.range_km = tt.num(i, "ev_range_km");
    task.ev.slow_charge_hr = tt.opt_num(i, "ev_slow_hr");
    task.ev.fast_charge_min = tt.num(i, "ev_fast_min");
    task.ev.charger_spacing_km = tt.num(i, "ev_spacing_km");
    task.ev.reserved_parking =
        detail::parse_yes_no(tt, i, "ev_parking", tasks_file);
    task.ev.special_lane = detail::parse_yes_no(tt, i, "ev_lane", tasks_file);
    task.chosen = chosen_from_string(tt.cell(i, "chosen"));
    ds.respondents[it->second].tasks.push_back(std::move(task));
  }

  ds.validate();
  return ds;
}

inline std::string respondents_csv(const Dataset& ds) {
  CsvWriter w(detail::respondent_columns());
  for (const auto& r : ds.respondents) {
    std::vector<std::string> row{
        std::to_string(r.respondent_id),         r.demographics.location,
        r.demographics.gender,                   r.demographics.marital,
        r.demographics.income_band,              r.demographics.education,
        r.demographics.employment,
        format_double(r.reported_icev_price_lacs),
        format_double(r.weekly_km)};
    for (int i = 0; i < kNumIndicators; ++i)
      row.push_back(std::to_string(r.indicators[i]));
    w.append_row(row);
  }
  return w.str();
}

inline std::string tasks_csv(const Dataset& ds) {
  CsvWriter w(detail::task_columns());
  for (const auto& r : ds.respondents) {
    for (const auto& t : r.tasks) {
      w.append_row({std::to_string(r.respondent_id),
                    std::to_string(t.task_id),
                    format_double(t.icev.price_lacs),
                    format_double(t.icev.running_cost_inr_km),
                    format_double(t.icev.range_km),
                    format_double(t.icev.fast_charge_min),
                    format_double(t.icev.charger_spacing_km),
                    format_double(t.ev.price_lacs),
                    format_double(t.ev.running_cost_inr_km),
                    format_double(t.ev.range_km),
                    t.ev.slow_charge_hr ? format_double(*t.ev.slow_charge_hr)
                                        : std::string{},
                    format_double(t.ev.fast_charge_min),
                    format_double(t.ev.charger_spacing_km),
                    t.ev.reserved_parking ? "yes" : "no",
                    t.ev.special_lane ? "yes" : "no",
                    to_string(t.chosen)});
    }
  }
  return w.str();
}

inline void write_dataset(const Dataset& ds, const std::string& respondents_file,
                          const std::string& tasks_file) {
  std::ofstream rf(respondents_file, std::ios::binary);
  if (!rf) throw Error("cannot write " + respondents_file);
  rf << respondents_csv(ds);
  std::ofstream tf(tasks_file, std::ios::binary);
  if (!tf) throw Error("cannot write " + tasks_file);
  tf << tasks_csv(ds);
}

}  // namespace refchoice
