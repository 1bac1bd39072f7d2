#pragma once

// Pairwise composite marginal likelihood. Each respondent's model reduces to
// a joint Gaussian over (utility differences, indicator propensities); the
// objective sums log probabilities of bivariate marginal events: every choice
// paired with every indicator, plus all indicator pairs (the "paper" policy),
// optionally also the choice pairs ("extended").

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "refchoice/dataset_io.hpp"
#include "refchoice/gaussian.hpp"
#include "refchoice/modeleval.hpp"
#include "refchoice/threading.hpp"

namespace refchoice {

enum class PairingPolicy { paper, extended };

inline PairingPolicy pairing_from_string(const std::string& s) {
  if (s == "paper") return PairingPolicy::paper;
  if (s == "extended") return PairingPolicy::extended;
  throw ValidationError("unknown pairing policy '" + s + "'");
}

inline std::string to_string(PairingPolicy p) {
  return p == PairingPolicy::paper ? "paper" : "extended";
}

// Mean vector, covariance and observed regions of one respondent's latent
// Gaussian stack: n_tasks utility differences followed by the 11 indicator
// propensities. A positive utility difference means the EV was chosen.
struct JointMoments {
  int n_tasks = 0;
  std::vector<double> mean;
  std::vector<double> cov;  // dense n x n
  std::vector<double> lo, hi;

  int n() const { return n_tasks + kNumIndicators; }
  double cov_at(int i, int j) const { return cov[i * n() + j]; }
};

struct PairTerm {
  enum class Kind { choice_indicator, indicator_indicator, choice_choice };
  Kind kind{};
  int coord_a = 0, coord_b = 0;
  double mean_a = 0, mean_b = 0, var_a = 1, var_b = 1, cov = 0;
  double lo_a = -kInf, hi_a = kInf, lo_b = -kInf, hi_b = kInf;
};

namespace detail {

// Rectangle log probability hardened for extreme parameter trials: an
// interval collapsed by threshold-gap underflow carries the probability
// floor, an implied correlation at the rounding edge of one is nudged
// inside, and non-finite inputs poison the value (the line search rejects
// such trials) instead of throwing across threads.
inline double guarded_log_rect(double zl1, double zu1, double zl2, double zu2,
                               double rho) {
  if (std::isnan(zl1) || std::isnan(zu1) || std::isnan(zl2) ||
      std::isnan(zu2) || !std::isfinite(rho))
    return std::numeric_limits<double>::quiet_NaN();
  if (!(zl1 < zu1) || !(zl2 < zu2)) return std::log(kProbFloor);
  constexpr double kRhoEdge = 1.0 - 1e-12;
  rho = std::clamp(rho, -kRhoEdge, kRhoEdge);
  return std::log(rect_prob(Rect2{zl1, zu1, zl2, zu2, rho}));
}

}  // namespace detail

inline double pair_logprob(const PairTerm& t) {
  const double sd_a = std::sqrt(t.var_a);
  const double sd_b = std::sqrt(t.var_b);
  const double rho = t.cov / (sd_a * sd_b);
  return detail::guarded_log_rect(
      (t.lo_a - t.mean_a) / sd_a, (t.hi_a - t.mean_a) / sd_a,
      (t.lo_b - t.mean_b) / sd_b, (t.hi_b - t.mean_b) / sd_b, rho);
}

namespace detail {

// Index pairs for a given task count, in the contract's fixed order: all
// choice x indicator pairs (task-major), then indicator pairs
// (lexicographic), then choice pairs when extended.
struct PairIndex {
  PairTerm::Kind kind;
  int a, b;
};

inline std::vector<PairIndex> pair_indices(int n_tasks, PairingPolicy policy) {
  std::vector<PairIndex> out;
  for (int t = 0; t < n_tasks; ++t)
    for (int q = 0; q < kNumIndicators; ++q)
      out.push_back({PairTerm::Kind::choice_indicator, t, n_tasks + q});
  for (int q1 = 0; q1 < kNumIndicators; ++q1)
    for (int q2 = q1 + 1; q2 < kNumIndicators; ++q2)
      out.push_back(
          {PairTerm::Kind::indicator_indicator, n_tasks + q1, n_tasks + q2});
  if (policy == PairingPolicy::extended)
    for (int t1 = 0; t1 < n_tasks; ++t1)
      for (int t2 = t1 + 1; t2 < n_tasks; ++t2)
        out.push_back({PairTerm::Kind::choice_choice, t1, t2});
  return out;
}

}  // namespace detail

inline PairTerm make_pair_term(const JointMoments& m,
                               const detail::PairIndex& idx) {
  PairTerm t;
  t.kind = idx.kind;
  t.coord_a = idx.a;
  t.coord_b = idx.b;
  t.mean_a = m.mean[idx.a];
  t.mean_b = m.mean[idx.b];
  t.var_a = m.cov_at(idx.a, idx.a);
  t.var_b = m.cov_at(idx.b, idx.b);
  t.cov = m.cov_at(idx.a, idx.b);
  t.lo_a = m.lo[idx.a];
  t.hi_a = m.hi[idx.a];
  t.lo_b = m.lo[idx.b];
  t.hi_b = m.hi[idx.b];
  return t;
}

inline std::vector<PairTerm> enumerate_pairs(const JointMoments& m,
                                             PairingPolicy policy) {
  std::vector<PairTerm> out;
  for (const auto& idx : detail::pair_indices(m.n_tasks, policy))
    out.push_back(make_pair_term(m, idx));
  return out;
}

// Marginal log probability of a single coordinate's observed region.
inline double marginal_logprob(const JointMoments& m, int coord) {
  const double sd = std::sqrt(m.cov_at(coord, coord));
  const double zl = (m.lo[coord] - m.mean[coord]) / sd;
  const double zu = (m.hi[coord] - m.mean[coord]) / sd;
  const double p = norm_cdf(zu) - norm_cdf(zl);
  return std::log(std::clamp(p, kProbFloor, 1.0));
}

// ---- reference moment assembly ---------------------------------------------

inline JointMoments joint_moments(const ModelSpec& spec, const ParamTable& table,
                                  const ParamValues& theta,
                                  const Respondent& r) {
  if (r.tasks.empty())
    throw ValidationError("joint_moments: respondent " +
                          std::to_string(r.respondent_id) + " has no tasks");

  const auto xbar = latent_means(spec, table, theta, r.demographics);
  const auto rho = table.correlations(theta);
  const double L[3][3] = {{1.0, rho[0], rho[1]},
                          {rho[0], 1.0, rho[2]},
                          {rho[1], rho[2], 1.0}};

  const int n_tasks = static_cast<int>(r.tasks.size());
  const int n = n_tasks + kNumIndicators;
  JointMoments m;
  m.n_tasks = n_tasks;
  m.mean.assign(n, 0.0);
  m.cov.assign(static_cast<std::size_t>(n) * n, 0.0);
  m.lo.assign(n, -kInf);
  m.hi.assign(n, kInf);

  // loading of every coordinate on the latent disturbance
  std::vector<LatentVector> lambda(n, LatentVector{0, 0, 0});

  for (int t = 0; t < n_tasks; ++t) {
    const auto& task = r.tasks[t];
    if (task.chosen == Chosen::unset)
      throw ValidationError("joint_moments: respondent " +
                            std::to_string(r.respondent_id) + " task " +
                            std::to_string(task.task_id) +
                            " has no observed choice");
    const TaskAttrs attrs = TaskAttrs::from(task, r.weekly_km);
    const auto [v_ev, v_icev] =
        systematic_utility(spec, table, theta, attrs, r.indicators, xbar);
    m.mean[t] = v_ev - v_icev;
    lambda[t] = latent_loading_vector(spec, table, theta, attrs);
    if (task.chosen == Chosen::ev)
      m.lo[t] = 0.0;
    else
      m.hi[t] = 0.0;
  }

  for (const auto& meas : spec.measurement) {
    const int coord = n_tasks + meas.indicator;
    double mean = theta[table.index(meas.intercept)];
    for (const auto& [latent, name] : meas.loadings) {
      const double load = theta[table.index(name)];
      lambda[coord][latent] = load;
      mean += load * xbar[latent];
    }
    m.mean[coord] = mean;
    const int cat = r.indicators[meas.indicator];
    const auto psi = [&](int pos) {
      return theta[table.index(meas.threshold_block + "_" +
                               std::to_string(pos))];
    };
    // thresholds (0, psi2, psi3, psi4); category k occupies (psi_{k-1}, psi_k]
    const double cuts[kLikertLevels + 1] = {-kInf, 0.0, psi(2), psi(3), psi(4),
                                            kInf};
    m.lo[coord] = cuts[cat - 1];
    m.hi[coord] = cuts[cat];
  }

  for (int i = 0; i < n; ++i) {
    LatentVector Ml{0, 0, 0};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) Ml[a] += L[a][b] * lambda[i][b];
    for (int j = 0; j <= i; ++j) {
      double c = 0.0;
      for (int a = 0; a < 3; ++a) c += Ml[a] * lambda[j][a];
      if (i == j) c += 1.0;  // unit-variance idiosyncratic noise
      m.cov[i * n + j] = m.cov[j * n + i] = c;
    }
  }

  // PSD sanity: unit noise floors every variance at 1 and keeps every implied
  // pairwise correlation strictly inside (-1, 1).
  for (int i = 0; i < n; ++i) {
    if (!(m.cov_at(i, i) >= 1.0))
      throw ValidationError("joint_moments: invalid variance");
    for (int j = 0; j < i; ++j)
      if (!(std::fabs(m.cov_at(i, j)) <
            std::sqrt(m.cov_at(i, i) * m.cov_at(j, j))))
        throw ValidationError("joint_moments: implied correlation out of range");
  }
  return m;
}

// Reference objective: fixed order (respondent id ascending, then pair
// order), compensated summation.
inline double cml_loglik(const ModelSpec& spec, const ParamTable& table,
                         const ParamValues& theta, const Dataset& ds,
                         PairingPolicy policy = PairingPolicy::paper) {
  std::vector<std::size_t> order(ds.respondents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ds.respondents[a].respondent_id < ds.respondents[b].respondent_id;
  });
  KahanSum total;
  for (std::size_t k : order) {
    const auto& r = ds.respondents[k];
    const auto m = joint_moments(spec, table, theta, r);
    KahanSum sum;
    for (const auto& idx : detail::pair_indices(m.n_tasks, policy))
      sum.add(pair_logprob(make_pair_term(m, idx)));
    if (!std::isfinite(sum.value()))
      throw Error("cml_loglik: non-finite contribution from respondent " +
                  std::to_string(r.respondent_id));
    total.add(sum.value());
  }
  return total.value();
}

}  // namespace refchoice
