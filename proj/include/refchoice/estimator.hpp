#pragma once

// Quasi-Newton maximization of the composite likelihood on the unconstrained
// scale, Godambe (sandwich) covariance, and the restricted-to-full model
// ladder. Gradients are numerical throughout; see the evaluator for the
// difference-quotient machinery.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "refchoice/cml_evaluator.hpp"
#include "refchoice/presets.hpp"

namespace refchoice {

struct FitOptions {
  int max_iterations = 500;
  double grad_tol = 1e-5;           // infinity norm, unconstrained scale
  double objective_rel_tol = 1e-9;  // three successive iterations
  double fd_step = 1e-5;
  double hessian_step = 1e-3;
  int threads = 1;
  bool compute_sandwich = true;
  // Seed the quasi-Newton matrix with the inverse curvature along each slot;
  // the parameter blocks live on very different scales.
  bool precondition = true;
  PairingPolicy pairing = PairingPolicy::paper;
};

struct FitResult {
  std::string model;
  PairingPolicy pairing = PairingPolicy::paper;
  ParamValues params;                  // constrained scale
  std::vector<double> unconstrained;   // optimizer's scale
  double cml = -kInf;
  double gradient_inf_norm = kInf;
  int iterations = 0;
  bool converged = false;  // true only when the gradient test passed
  bool line_search_failed = false;
  bool hessian_pseudo_inverse = false;
  bool has_sandwich = false;
  Eigen::MatrixXd sandwich;            // constrained scale, named order
  std::vector<double> std_errors;      // per named parameter; 0 where fixed
  double wall_seconds = 0.0;
};

// Start heuristics: zero coefficients, unit curvatures, independent latents,
// unit loadings oriented by the spec's sign anchors, and measurement
// intercepts/thresholds matched to the empirical indicator marginals.
inline ParamValues neutral_start(const ModelSpec& spec, const ParamTable& table,
                                 const Dataset& ds) {
  ParamValues v = table.make_values();
  auto set_if_free = [&](const std::string& name, double value) {
    const int idx = table.index(name);
    if (!table.info(idx).fixed) v[idx] = value;
  };
  for (const auto& info : table.infos()) {
    if (info.fixed) continue;
    if (info.kind == ParamKind::curvature) v[table.index(info.name)] = 1.0;
  }

  // empirical cumulative indicator frequencies
  std::array<std::array<double, kNumThresholds>, kNumIndicators> cum{};
  const double n = static_cast<double>(ds.respondents.size());
  if (n == 0) throw ValidationError("neutral_start: empty dataset");
  for (const auto& r : ds.respondents)
    for (int q = 0; q < kNumIndicators; ++q)
      for (int m = 0; m < kNumThresholds; ++m)
        if (r.indicators[q] <= m + 1) cum[q][m] += 1.0;

  for (const auto& m : spec.measurement) {
    const bool dedicated = m.loadings.size() == 1;
    double start_load = 0.0;
    if (dedicated) {
      const int latent = m.loadings.begin()->first;
      start_load = -1.0;
      for (const auto& [name, anchor] : spec.sign_anchors)
        if (spec.latent_index(name) == latent)
          start_load = static_cast<double>(anchor.sign);
      set_if_free(m.loadings.begin()->second, start_load);
    }
    // propensity sd at the start values (latent variance one)
    const double sd = std::sqrt(1.0 + start_load * start_load);
    std::array<double, kNumThresholds> z{};
    double prev = -kInf;
    for (int k = 0; k < kNumThresholds; ++k) {
      double f = cum[m.indicator][k] / n;
      f = std::min(std::max(f, 0.5 / n), 1.0 - 0.5 / n);
      double zk = norm_quantile(f);
      if (zk < prev + 1e-3) zk = prev + 1e-3;  // guard empty categories
      z[k] = zk;
      prev = zk;
    }
    const double intercept = -sd * z[0];
    set_if_free(m.intercept, intercept);
    for (int pos = 2; pos <= kNumThresholds; ++pos)
      set_if_free(m.threshold_block + "_" + std::to_string(pos),
                  sd * z[pos - 1] + intercept);
  }
  table.validate_values(v);
  return v;
}

// Flip latent orientations so each anchored loading carries its declared
// sign. The flip negates every parameter attached to the latent and leaves
// the likelihood exactly unchanged.
inline void canonicalize_latent_signs(const ModelSpec& spec,
                                      const ParamTable& table, ParamValues& v) {
  for (const auto& [latent_name, anchor] : spec.sign_anchors) {
    const int r = spec.latent_index(latent_name);
    std::string anchor_coef;
    for (const auto& m : spec.measurement)
      if (m.indicator == anchor.indicator && m.loadings.count(r))
        anchor_coef = m.loadings.at(r);
    if (anchor_coef.empty())
      throw ValidationError("sign anchor indicator does not load latent '" +
                            latent_name + "'");
    const double value = v[table.index(anchor_coef)];
    if (value == 0.0 || (value > 0) == (anchor.sign > 0)) continue;

    std::set<std::string> flip;
    for (const auto& t : spec.terms)
      if ((t.kind == Term::Kind::latent_main ||
           t.kind == Term::Kind::latent_interaction) &&
          t.latent == r)
        flip.insert(t.coef);
    for (const auto& s : spec.structural)
      if (s.latent == r) flip.insert(s.coef);
    for (const auto& m : spec.measurement)
      if (m.loadings.count(r)) flip.insert(m.loadings.at(r));
    for (const auto& c : spec.correlations)
      if (c.latent_a == r || c.latent_b == r) flip.insert(c.coef);
    for (const auto& name : flip) {
      const int idx = table.index(name);
      if (table.info(idx).fixed) {
        if (v[idx] != 0.0)
          throw ValidationError("cannot flip fixed parameter '" + name + "'");
        continue;
      }
      v[idx] = -v[idx];
    }
  }
}

namespace detail {

// Backtracking line search with quadratic/cubic interpolation (function
// values only). Returns the accepted step, or 0 when no improvement exists
// along the direction.
template <typename F>
double line_search(F&& phi, double phi0, double dphi0, int max_trials = 30) {
  const double c1 = 1e-4;
  double alpha = 1.0;
  double prev_alpha = 0.0, prev_phi = phi0;
  for (int trial = 0; trial < max_trials; ++trial) {
    const double val = phi(alpha);
    if (std::isfinite(val) && val <= phi0 + c1 * alpha * dphi0) return alpha;
    double next;
    if (trial == 0 || !std::isfinite(val)) {
      // quadratic through phi(0), phi'(0), phi(alpha)
      next = std::isfinite(val)
                 ? -dphi0 * alpha * alpha /
                       (2.0 * (val - phi0 - dphi0 * alpha))
                 : alpha / 4.0;
    } else {
      // cubic through the two most recent trials
      const double d1 = val - phi0 - dphi0 * alpha;
      const double d2 = prev_phi - phi0 - dphi0 * prev_alpha;
      const double a = (d1 / (alpha * alpha) - d2 / (prev_alpha * prev_alpha)) /
                       (alpha - prev_alpha);
      const double b =
          (-prev_alpha * d1 / (alpha * alpha) +
           alpha * d2 / (prev_alpha * prev_alpha)) /
          (alpha - prev_alpha);
      const double disc = b * b - 3.0 * a * dphi0;
      next = (a != 0.0 && disc >= 0.0) ? (-b + std::sqrt(disc)) / (3.0 * a)
                                       : alpha / 2.0;
    }
    prev_alpha = alpha;
    prev_phi = val;
    if (!std::isfinite(next)) next = alpha / 2.0;
    alpha = std::min(std::max(next, 0.1 * alpha), 0.5 * alpha);
    if (alpha < 1e-14) break;
  }
  return 0.0;
}

}  // namespace detail

inline void compute_sandwich(const CmlEvaluator& eval, FitResult& fit,
                             const FitOptions& opt) {
  const auto& table = eval.table();
  const int P = eval.n_slots();
  const Eigen::MatrixXd S = eval.scores(fit.unconstrained, opt.fd_step);
  const Eigen::MatrixXd J = S.transpose() * S;
  const Eigen::MatrixXd H = eval.hessian(fit.unconstrained, opt.hessian_step);

  // Godambe form H^-1 J H^-1; H enters twice so its sign convention cancels.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
  const auto& lam = es.eigenvalues();
  const double lam_max = lam.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * std::max(lam_max, 1.0);
  Eigen::VectorXd inv_lam(P);
  fit.hessian_pseudo_inverse = false;
  for (int i = 0; i < P; ++i) {
    if (std::fabs(lam[i]) <= tol) {
      inv_lam[i] = 0.0;
      fit.hessian_pseudo_inverse = true;
    } else {
      inv_lam[i] = 1.0 / lam[i];
    }
  }
  const Eigen::MatrixXd Hinv =
      es.eigenvectors() * inv_lam.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd cov_w = Hinv * J * Hinv;

  // delta method through the unpack transform, named constrained scale
  const std::size_t M = table.size();
  Eigen::MatrixXd G(M, P);
  const double h = 1e-6;
  for (int s = 0; s < P; ++s) {
    auto wp = fit.unconstrained, wm = fit.unconstrained;
    wp[s] += h;
    wm[s] -= h;
    const auto vp = table.unpack(wp), vm = table.unpack(wm);
    for (std::size_t i = 0; i < M; ++i)
      G(static_cast<Eigen::Index>(i), s) = (vp[i] - vm[i]) / (2.0 * h);
  }
  fit.sandwich = (G * cov_w * G.transpose()).eval();
  fit.sandwich = 0.5 * (fit.sandwich + fit.sandwich.transpose()).eval();
  fit.std_errors.assign(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    const double var = fit.sandwich(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(i));
    fit.std_errors[i] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  fit.has_sandwich = true;
}

inline FitResult maximize_cml(const ModelSpec& spec, const Dataset& ds,
                              const ParamValues& start,
                              const FitOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  ParamTable table(spec);
  table.validate_values(start);
  CmlEvaluator eval(spec, table, ds, opt.pairing, opt.threads);
  const int P = eval.n_slots();

  std::vector<double> w = table.pack(start);
  double f = eval.loglik_unconstrained(w);
  if (!std::isfinite(f))
    throw Error("maximize_cml: objective not finite at the start point");

  FitResult fit;
  fit.model = spec.name;
  fit.pairing = opt.pairing;

  // BFGS in minimization form on the negated objective.
  Eigen::VectorXd g(P);
  auto refresh_gradient = [&](const std::vector<double>& at) {
    const auto grad = eval.gradient(at, opt.fd_step);
    for (int i = 0; i < P; ++i) g[i] = -grad[i];
  };
  refresh_gradient(w);

  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(P, P);
  bool scaled = false;
  if (opt.precondition) {
    const auto diag = eval.hessian_diagonal(w, opt.hessian_step);
    std::vector<double> mags;
    for (double d : diag)
      if (std::isfinite(d) && std::fabs(d) > 0.0) mags.push_back(std::fabs(d));
    if (!mags.empty()) {
      std::nth_element(mags.begin(), mags.begin() + mags.size() / 2,
                       mags.end());
      const double floor = 0.05 * mags[mags.size() / 2];
      for (int i = 0; i < P; ++i) {
        const double d = std::fabs(diag[i]);
        B(i, i) = 1.0 / std::max(std::isfinite(d) ? d : 0.0, floor);
      }
      scaled = true;
    }
  }
  int small_change_streak = 0;
  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) break;

    Eigen::VectorXd d = -(B * g);
    double dphi0 = g.dot(d);
    if (!(dphi0 < 0.0)) {  // not a descent direction; reset curvature memory
      B.setIdentity();
      scaled = false;
      d = -g;
      dphi0 = g.dot(d);
    }

    const double alpha = detail::line_search(
        [&](double a) {
          std::vector<double> trial = w;
          for (int i = 0; i < P; ++i) trial[i] += a * d[i];
          return -eval.loglik_trial(trial);
        },
        -f, dphi0);
    if (alpha == 0.0) {
      fit.line_search_failed = true;
      break;
    }

    std::vector<double> w_new = w;
    for (int i = 0; i < P; ++i) w_new[i] += alpha * d[i];
    const double f_new = eval.loglik_trial(w_new);
    const Eigen::VectorXd g_old = g;
    refresh_gradient(w_new);

    const Eigen::VectorXd s = alpha * d;
    const Eigen::VectorXd y = g - g_old;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        B = Eigen::MatrixXd::Identity(P, P) * (sy / y.dot(y));
        scaled = true;
      }
      const Eigen::VectorXd By = B * y;
      const double yBy = y.dot(By);
      // BFGS inverse update
      B += ((sy + yBy) / (sy * sy)) * (s * s.transpose()) -
           (By * s.transpose() + s * By.transpose()) / sy;
    }

    const double rel_change =
        std::fabs(f_new - f) / std::max(1.0, std::fabs(f_new));
    small_change_streak =
        rel_change <= opt.objective_rel_tol ? small_change_streak + 1 : 0;
    w = std::move(w_new);
    f = f_new;
    if (small_change_streak >= 3) break;
  }

  fit.iterations = iter;
  fit.unconstrained = w;
  fit.cml = f;
  fit.gradient_inf_norm = g.lpNorm<Eigen::Infinity>();
  fit.converged = fit.gradient_inf_norm <= opt.grad_tol;

  ParamValues v = table.unpack(w);
  canonicalize_latent_signs(spec, table, v);
  fit.unconstrained = table.pack(v);
  fit.params = std::move(v);

  if (opt.compute_sandwich) compute_sandwich(eval, fit, opt);

  fit.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return fit;
}

// Restricted-to-full ladder: each stage starts from the previous optimum with
// the newly freed parameters at their formerly constrained values, so the
// objective can only improve along the ladder.
inline std::array<FitResult, 3> fit_ladder(const Dataset& ds,
                                           const FitOptions& opt = {}) {
  const ModelSpec m1 = presets::model1();
  const ModelSpec m2 = presets::model2();
  const ModelSpec m3 = presets::model3();
  ParamTable t1(m1), t2(m2), t3(m3);

  auto carry = [](const ParamTable& from, const ParamValues& v,
                  const ParamTable& to) {
    ParamValues out = to.make_values();
    for (const auto& info : to.infos()) {
      if (info.fixed) continue;
      out[to.index(info.name)] = v[from.index(info.name)];
    }
    to.validate_values(out);
    return out;
  };

  FitResult f1 = maximize_cml(m1, ds, neutral_start(m1, t1, ds), opt);
  FitResult f2 = maximize_cml(m2, ds, carry(t1, f1.params, t2), opt);
  FitResult f3 = maximize_cml(m3, ds, carry(t2, f2.params, t3), opt);
  return {std::move(f1), std::move(f2), std::move(f3)};
}

// ---- fit JSON ----------------------------------------------------------------

inline nlohmann::json fit_to_json(const FitResult& fit, const ParamTable& table) {
  nlohmann::json j;
  j["model"] = fit.model;
  j["pairing"] = to_string(fit.pairing);
  j["cml"] = fit.cml;
  j["converged"] = fit.converged;
  j["line_search_failed"] = fit.line_search_failed;
  j["iterations"] = fit.iterations;
  j["gradient_inf_norm"] = fit.gradient_inf_norm;
  j["wall_seconds"] = fit.wall_seconds;
  j["params"] = table.to_json(fit.params);
  j["unconstrained"] = fit.unconstrained;
  if (fit.has_sandwich) {
    j["hessian_pseudo_inverse"] = fit.hessian_pseudo_inverse;
    nlohmann::json se = nlohmann::json::object();
    for (std::size_t i = 0; i < table.size(); ++i)
      se[table.info(static_cast<int>(i)).name] = fit.std_errors[i];
    j["std_errors"] = se;
    std::vector<std::vector<double>> cov(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
      cov[i].resize(table.size());
      for (std::size_t k = 0; k < table.size(); ++k)
        cov[i][k] = fit.sandwich(static_cast<Eigen::Index>(i),
                                 static_cast<Eigen::Index>(k));
    }
    j["sandwich"] = cov;
  }
  return j;
}

inline FitResult fit_from_json(const nlohmann::json& j, const ParamTable& table) {
  FitResult fit;
  fit.model = j.at("model").get<std::string>();
  fit.pairing = pairing_from_string(j.at("pairing").get<std::string>());
  fit.cml = j.at("cml").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.line_search_failed = j.value("line_search_failed", false);
  fit.iterations = j.at("iterations").get<int>();
  fit.gradient_inf_norm = j.at("gradient_inf_norm").get<double>();
  fit.wall_seconds = j.value("wall_seconds", 0.0);
  fit.params = table.from_json(j.at("params"));
  j.at("unconstrained").get_to(fit.unconstrained);
  if (j.contains("std_errors")) {
    fit.has_sandwich = true;
    fit.hessian_pseudo_inverse = j.value("hessian_pseudo_inverse", false);
    fit.std_errors.assign(table.size(), 0.0);
    for (const auto& [name, se] : j.at("std_errors").items())
      fit.std_errors[table.index(name)] = se.get<double>();
    if (j.contains("sandwich")) {
      const auto& cov = j.at("sandwich");
      fit.sandwich.resize(table.size(), table.size());
      for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t k = 0; k < table.size(); ++k)
          fit.sandwich(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(k)) =
              cov[i][k].get<double>();
    }
  }
  return fit;
}

}  // namespace refchoice
