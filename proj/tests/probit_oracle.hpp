#pragma once

// Test-only independent binary probit fitter (Newton-Raphson with analytic
// derivatives). Serves as the oracle for the probit-reduction and sandwich
// standard-error checks; deliberately shares no code with the estimator.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "refchoice/datamodel.hpp"
#include "refchoice/gaussian.hpp"
#include "refchoice/modeleval.hpp"

namespace probit_oracle {

struct Design {
  Eigen::MatrixXd X;   // one row per task
  Eigen::VectorXd q;   // +1 EV, -1 ICEV
  std::vector<std::string> names;
};

// Regressors of the utility difference for the linear (curvature-one) model:
// constant, both fast-charging times, the three reference differences and the
// eight indicator dummies.
inline Design build_design(const refchoice::Dataset& ds) {
  using namespace refchoice;
  Design d;
  d.names = {"asc_ev",      "b_fast_ev", "b_fast_icev", "b_price",
             "b_range",     "b_fuel",    "th_ind10_l1", "th_ind10_l2",
             "th_ind10_l4", "th_ind10_l5", "th_ind11_l1", "th_ind11_l2",
             "th_ind11_l4", "th_ind11_l5"};
  std::size_t rows = 0;
  for (const auto& r : ds.respondents) rows += r.tasks.size();
  d.X.resize(rows, 14);
  d.q.resize(rows);
  std::size_t row = 0;
  for (const auto& r : ds.respondents) {
    for (const auto& t : r.tasks) {
      const TaskAttrs a = TaskAttrs::from(t, r.weekly_km);
      d.X(row, 0) = 1.0;
      d.X(row, 1) = a.ev.fast_charge_min;
      d.X(row, 2) = -a.icev.fast_charge_min;
      d.X(row, 3) = a.ev.price_lacs - a.icev.price_lacs;
      d.X(row, 4) = a.ev.log_range_100km - a.icev.log_range_100km;
      d.X(row, 5) = a.icev.weekly_fuel_inr100 - a.ev.weekly_fuel_inr100;
      const int k10 = r.indicators[9], k11 = r.indicators[10];
      d.X(row, 6) = k10 == 1;
      d.X(row, 7) = k10 == 2;
      d.X(row, 8) = k10 == 4;
      d.X(row, 9) = k10 == 5;
      d.X(row, 10) = k11 == 1;
      d.X(row, 11) = k11 == 2;
      d.X(row, 12) = k11 == 4;
      d.X(row, 13) = k11 == 5;
      d.q(row) = t.chosen == Chosen::ev ? 1.0 : -1.0;
      ++row;
    }
  }
  return d;
}

struct Fit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;        // observed-information standard errors
  double loglik = 0.0;
  bool converged = false;
};

inline double loglik(const Design& d, const Eigen::VectorXd& beta) {
  double ll = 0.0;
  const Eigen::VectorXd z = d.q.array() * (d.X * beta).array();
  for (Eigen::Index i = 0; i < z.size(); ++i)
    ll += std::log(std::max(refchoice::norm_cdf(z[i]), 1e-300));
  return ll;
}

inline Fit fit(const Design& d, int max_iter = 60) {
  const Eigen::Index p = d.X.cols();
  Fit out;
  out.beta = Eigen::VectorXd::Zero(p);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
      const double z = d.q(i) * d.X.row(i).dot(out.beta);
      const double mills =
          refchoice::norm_pdf(z) / std::max(refchoice::norm_cdf(z), 1e-300);
      g += d.q(i) * mills * d.X.row(i).transpose();
      H -= mills * (mills + z) * d.X.row(i).transpose() * d.X.row(i);
    }
    const Eigen::VectorXd step = (-H).ldlt().solve(g);
    out.beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) {
      out.converged = true;
      Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
      for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const double z = d.q(i) * d.X.row(i).dot(out.beta);
        const double mills =
            refchoice::norm_pdf(z) / std::max(refchoice::norm_cdf(z), 1e-300);
        info += mills * (mills + z) * d.X.row(i).transpose() * d.X.row(i);
      }
      out.se = info.inverse().diagonal().cwiseSqrt();
      break;
    }
  }
  out.loglik = loglik(d, out.beta);
  return out;
}

// Scalar probit with a fixed offset: z = q * (offset + beta * x).
struct SingleFit {
  double beta = 0.0;
  double se = 0.0;
  bool converged = false;
};

inline SingleFit fit_single(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& offset,
                            const Eigen::VectorXd& q, int max_iter = 80) {
  SingleFit out;
  for (int iter = 0; iter < max_iter; ++iter) {
    double g = 0.0, h = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double z = q(i) * (offset(i) + out.beta * x(i));
      const double mills =
          refchoice::norm_pdf(z) / std::max(refchoice::norm_cdf(z), 1e-300);
      g += q(i) * mills * x(i);
      h -= mills * (mills + z) * x(i) * x(i);
    }
    const double step = -g / h;
    out.beta += step;
    if (std::fabs(step) < 1e-12) {
      out.converged = true;
      double info = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double z = q(i) * (offset(i) + out.beta * x(i));
        const double mills =
            refchoice::norm_pdf(z) / std::max(refchoice::norm_cdf(z), 1e-300);
        info += mills * (mills + z) * x(i) * x(i);
      }
      out.se = 1.0 / std::sqrt(info);
      break;
    }
  }
  return out;
}

}  // namespace probit_oracle
