#pragma once

// Compiled evaluator for the pairwise composite likelihood. Datasets are
// compiled once into flat per-respondent plans; objective, finite-difference
// scores and Hessian reuse them. Perturbing one unconstrained slot can only
// move pair terms whose coordinates the corresponding parameters feed, so the
// difference quotients are taken over those pairs alone - the untouched terms
// cancel exactly.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "refchoice/cml.hpp"

namespace refchoice {

class CmlEvaluator {
 public:
  CmlEvaluator(const ModelSpec& spec, const ParamTable& table,
               const Dataset& ds, PairingPolicy policy = PairingPolicy::paper,
               int threads = 1)
      : spec_(spec), table_(table), policy_(policy), threads_(threads) {
    compile_model();
    compile_dataset(ds);
  }

  int n_slots() const { return table_.n_slots(); }
  std::size_t n_respondents() const { return resp_.size(); }
  const ParamTable& table() const { return table_; }
  const ModelSpec& spec() const { return spec_; }
  PairingPolicy policy() const { return policy_; }

  // Objective at a constrained parameter vector. Deterministic reduction:
  // per-respondent values land in fixed slots, then a compensated sum in
  // respondent-id order.
  double loglik(const ParamValues& theta) const {
    table_.validate_values(theta);
    std::vector<double> per(resp_.size());
    const Shared sh = make_shared(theta);
    parallel_for(resp_.size(), threads_, [&](std::size_t i) {
      per[i] = eval_respondent(resp_[i], theta.data(), sh, nullptr);
    });
    KahanSum total;
    for (double v : per) total.add(v);
    if (!std::isfinite(total.value())) {
      for (std::size_t i = 0; i < per.size(); ++i)
        if (!std::isfinite(per[i]))
          throw Error("cml: non-finite contribution from respondent " +
                      std::to_string(resp_[i].id));
    }
    return total.value();
  }

  double loglik_unconstrained(const std::vector<double>& w) const {
    return loglik(table_.unpack(w));
  }

  // Optimizer trial evaluation: skips value validation and returns a
  // non-finite objective (for the line search to reject) instead of throwing.
  double loglik_trial(const std::vector<double>& w) const {
    const ParamValues theta = table_.unpack(w);
    std::vector<double> per(resp_.size());
    const Shared sh = make_shared(theta);
    parallel_for(resp_.size(), threads_, [&](std::size_t i) {
      per[i] = eval_respondent(resp_[i], theta.data(), sh, nullptr);
    });
    KahanSum total;
    for (double v : per) total.add(v);
    return total.value();
  }

  // Central finite-difference gradient on the unconstrained scale.
  std::vector<double> gradient(const std::vector<double>& w,
                               double step = 1e-5) const {
    const int P = n_slots();
    std::vector<double> g(P, 0.0);
    parallel_for(P, threads_, [&](std::size_t s) {
      g[s] = slot_derivative(w, static_cast<int>(s), step, nullptr);
    });
    return g;
  }

  // N x P matrix of per-respondent score contributions, central differences
  // of each respondent's own contribution.
  Eigen::MatrixXd scores(const std::vector<double>& w,
                         double step = 1e-5) const {
    const int P = n_slots();
    Eigen::MatrixXd S(resp_.size(), P);
    parallel_for(P, threads_, [&](std::size_t s) {
      std::vector<double> col(resp_.size());
      slot_derivative(w, static_cast<int>(s), step, &col);
      for (std::size_t i = 0; i < resp_.size(); ++i)
        S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = col[i];
    });
    return S;
  }

  // Finite-difference Hessian of the total objective. Mixed partials run
  // only over pairs both slots feed; everything else is exactly zero.
  Eigen::MatrixXd hessian(const std::vector<double>& w,
                          double step = 1e-3) const {
    const int P = n_slots();
    Eigen::MatrixXd H(P, P);
    H.setZero();

    // base per-pair log probabilities for the diagonal stencil
    const ParamValues theta0 = table_.unpack(w);
    const Shared sh0 = make_shared(theta0);
    std::vector<std::vector<double>> base_lp(resp_.size());
    std::vector<double> base_sum(resp_.size());
    parallel_for(resp_.size(), threads_, [&](std::size_t i) {
      base_lp[i].resize(pair_count(resp_[i]));
      base_sum[i] =
          eval_respondent(resp_[i], theta0.data(), sh0, base_lp[i].data());
    });

    parallel_for(P, threads_, [&](std::size_t s) {
      const auto vp = table_.unpack(perturbed(w, {{int(s), step}}));
      const auto vm = table_.unpack(perturbed(w, {{int(s), -step}}));
      const Shared shp = make_shared(vp), shm = make_shared(vm);
      KahanSum acc;
      for (std::size_t i = 0; i < resp_.size(); ++i) {
        const auto& pairs = affected_pairs(resp_[i], static_cast<int>(s));
        const double fp = eval_subset(resp_[i], vp.data(), shp, pairs);
        const double fm = eval_subset(resp_[i], vm.data(), shm, pairs);
        double fb = 0.0;
        for (int p : pairs) fb += base_lp[i][p];
        acc.add(fp - 2.0 * fb + fm);
      }
      H(s, s) = acc.value() / (step * step);
    });

    // strict upper triangle, parallel over the flattened index
    std::vector<std::pair<int, int>> st;
    st.reserve(static_cast<std::size_t>(P) * (P - 1) / 2);
    for (int s = 0; s < P; ++s)
      for (int t = s + 1; t < P; ++t) st.push_back({s, t});
    parallel_for(st.size(), threads_, [&](std::size_t k) {
      const auto [s, t] = st[k];
      const auto vpp = table_.unpack(perturbed(w, {{s, step}, {t, step}}));
      const auto vpm = table_.unpack(perturbed(w, {{s, step}, {t, -step}}));
      const auto vmp = table_.unpack(perturbed(w, {{s, -step}, {t, step}}));
      const auto vmm = table_.unpack(perturbed(w, {{s, -step}, {t, -step}}));
      const Shared shpp = make_shared(vpp), shpm = make_shared(vpm),
                   shmp = make_shared(vmp), shmm = make_shared(vmm);
      const std::uint16_t mask_t = slot_mask_[t];
      KahanSum acc;
      bool any = false;
      for (std::size_t i = 0; i < resp_.size(); ++i) {
        const auto& pairs_s = affected_pairs(resp_[i], s);
        auto& scratch = intersection_scratch();
        scratch.clear();
        const auto& blocks = pair_blocks(resp_[i]);
        for (int p : pairs_s)
          if (mask_t & blocks[p]) scratch.push_back(p);
        if (scratch.empty()) continue;
        any = true;
        acc.add(eval_subset(resp_[i], vpp.data(), shpp, scratch) -
                eval_subset(resp_[i], vpm.data(), shpm, scratch) -
                eval_subset(resp_[i], vmp.data(), shmp, scratch) +
                eval_subset(resp_[i], vmm.data(), shmm, scratch));
      }
      if (any) {
        const double v = acc.value() / (4.0 * step * step);
        H(s, t) = v;
        H(t, s) = v;
      }
    });
    return H;
  }

  // Reference-path comparison helper: moments of one respondent.
  std::size_t pair_count_of(std::size_t i) const { return pair_count(resp_[i]); }

  // Second derivative of the objective along each slot alone, for optimizer
  // preconditioning; same stencil as the Hessian diagonal.
  std::vector<double> hessian_diagonal(const std::vector<double>& w,
                                       double step = 1e-3) const {
    const int P = n_slots();
    const ParamValues theta0 = table_.unpack(w);
    const Shared sh0 = make_shared(theta0);
    std::vector<std::vector<double>> base_lp(resp_.size());
    parallel_for(resp_.size(), threads_, [&](std::size_t i) {
      base_lp[i].resize(pair_count(resp_[i]));
      eval_respondent(resp_[i], theta0.data(), sh0, base_lp[i].data());
    });
    std::vector<double> diag(P, 0.0);
    parallel_for(P, threads_, [&](std::size_t s) {
      const auto vp = table_.unpack(perturbed(w, {{int(s), step}}));
      const auto vm = table_.unpack(perturbed(w, {{int(s), -step}}));
      const Shared shp = make_shared(vp), shm = make_shared(vm);
      KahanSum acc;
      for (std::size_t i = 0; i < resp_.size(); ++i) {
        const auto& pairs = affected_pairs(resp_[i], static_cast<int>(s));
        if (pairs.empty()) continue;
        double fb = 0.0;
        for (int p : pairs) fb += base_lp[i][p];
        acc.add(eval_subset(resp_[i], vp.data(), shp, pairs) - 2.0 * fb +
                eval_subset(resp_[i], vm.data(), shm, pairs));
      }
      diag[s] = acc.value() / (step * step);
    });
    return diag;
  }

 private:
  // ---- compiled structures --------------------------------------------------

  struct RefPowerPart {
    int beta, alpha;
    double d;
  };
  struct LoadPart {
    int latent;
    int coef;
    double x;
  };
  struct CompiledTask {
    std::vector<std::pair<int, double>> lin;  // theta index, multiplier
    std::vector<RefPowerPart> rp;
    std::vector<LoadPart> load;
    double lo, hi;  // observed region of the utility difference
  };
  struct CompiledRespondent {
    std::int64_t id;
    std::vector<CompiledTask> tasks;
    std::array<std::vector<int>, kNumLatents> pi;  // structural entries
    std::array<std::uint8_t, kNumIndicators> cat;
  };
  struct CompiledMeasurement {
    std::array<int, kNumLatents> load{-1, -1, -1};
    int intercept = -1;
    std::array<int, 3> psi{-1, -1, -1};
  };

  // Shared per-theta state: the error correlation matrix.
  struct Shared {
    double L[3][3];
  };

  Shared make_shared(const ParamValues& theta) const {
    const auto rho = table_.correlations(theta);
    return Shared{{{1.0, rho[0], rho[1]},
                   {rho[0], 1.0, rho[2]},
                   {rho[1], rho[2], 1.0}}};
  }

  void compile_model() {
    for (const auto& m : spec_.measurement) {
      CompiledMeasurement cm;
      for (const auto& [latent, name] : m.loadings)
        cm.load[latent] = table_.index(name);
      cm.intercept = table_.index(m.intercept);
      for (int pos = 2; pos <= kNumThresholds; ++pos)
        cm.psi[pos - 2] =
            table_.index(m.threshold_block + "_" + std::to_string(pos));
      meas_[m.indicator] = cm;
    }

    // which indicators each latent feeds (through loadings)
    std::array<std::vector<int>, kNumLatents> latent_inds;
    for (const auto& m : spec_.measurement)
      for (const auto& [latent, name] : m.loadings)
        latent_inds[latent].push_back(m.indicator);

    // slot masks: bit 0 = choice block, bit 1+q = indicator q, all bits for
    // the correlation block
    constexpr std::uint16_t kChoiceBit = 1;
    const std::uint16_t all_mask = (1u << (kNumIndicators + 1)) - 1;
    std::vector<std::uint16_t> param_mask(table_.size(), 0);
    auto touch = [&](const std::string& name, std::uint16_t bits) {
      param_mask[table_.index(name)] |= bits;
    };
    for (const auto& t : spec_.terms) {
      touch(t.coef, kChoiceBit);
      if (t.kind == Term::Kind::ref_power) touch(t.curvature, kChoiceBit);
    }
    for (const auto& s : spec_.structural) {
      std::uint16_t bits = kChoiceBit;
      for (int q : latent_inds[s.latent]) bits |= 1u << (1 + q);
      touch(s.coef, bits);
    }
    for (const auto& m : spec_.measurement) {
      const std::uint16_t bit = 1u << (1 + m.indicator);
      for (const auto& [latent, name] : m.loadings) touch(name, bit);
      touch(m.intercept, bit);
      for (int pos = 2; pos <= kNumThresholds; ++pos)
        touch(m.threshold_block + "_" + std::to_string(pos), bit);
    }
    for (const auto& c : spec_.correlations) touch(c.coef, all_mask);

    slot_mask_.assign(n_slots(), 0);
    for (std::size_t i = 0; i < table_.size(); ++i)
      if (table_.info(static_cast<int>(i)).slot >= 0)
        slot_mask_[table_.info(static_cast<int>(i)).slot] = param_mask[i];
  }

  void compile_dataset(const Dataset& ds) {
    ds.validate();
    std::vector<std::size_t> order(ds.respondents.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ds.respondents[a].respondent_id < ds.respondents[b].respondent_id;
    });

    resp_.reserve(ds.respondents.size());
    for (std::size_t k : order) {
      const auto& r = ds.respondents[k];
      if (r.tasks.empty())
        throw ValidationError("cml: respondent " +
                              std::to_string(r.respondent_id) + " has no tasks");
      CompiledRespondent cr;
      cr.id = r.respondent_id;
      for (int q = 0; q < kNumIndicators; ++q)
        cr.cat[q] = static_cast<std::uint8_t>(r.indicators[q]);
      for (const auto& s : spec_.structural)
        if (r.demographics.level(s.field) == s.level)
          cr.pi[s.latent].push_back(table_.index(s.coef));

      for (const auto& task : r.tasks) {
        if (task.chosen == Chosen::unset)
          throw ValidationError("cml: respondent " +
                                std::to_string(r.respondent_id) + " task " +
                                std::to_string(task.task_id) +
                                " has no observed choice");
        const TaskAttrs attrs = TaskAttrs::from(task, r.weekly_km);
        CompiledTask ct;
        ct.lo = task.chosen == Chosen::ev ? 0.0 : -kInf;
        ct.hi = task.chosen == Chosen::ev ? kInf : 0.0;
        for (const auto& t : spec_.terms) {
          const double sign = t.alt == Alt::ev ? 1.0 : -1.0;
          switch (t.kind) {
            case Term::Kind::constant:
              ct.lin.push_back({table_.index(t.coef), sign});
              break;
            case Term::Kind::linear:
              ct.lin.push_back(
                  {table_.index(t.coef),
                   sign * (t.alt == Alt::ev ? attrs.ev : attrs.icev)
                              .value(t.attr)});
              break;
            case Term::Kind::ref_power:
              ct.rp.push_back({table_.index(t.coef), table_.index(t.curvature),
                               attrs.ref_diff(t.attr, t.direction)});
              break;
            case Term::Kind::dummy:
              if (r.indicators[t.indicator] == t.level)
                ct.lin.push_back({table_.index(t.coef), sign});
              break;
            case Term::Kind::latent_main:
              ct.load.push_back({t.latent, table_.index(t.coef), sign});
              break;
            case Term::Kind::latent_interaction:
              ct.load.push_back({t.latent, table_.index(t.coef),
                                 sign * attrs.expr(t.attr, t.mode, t.alt)});
              break;
          }
        }
        cr.tasks.push_back(std::move(ct));
      }
      const int T = static_cast<int>(cr.tasks.size());
      if (!layout_.count(T)) build_layout(T);
      resp_.push_back(std::move(cr));
    }
  }

  // Pair layout and per-slot affected lists for one task count.
  struct Layout {
    std::vector<detail::PairIndex> pairs;
    std::vector<std::uint16_t> blocks;           // block mask per pair
    std::vector<std::vector<int>> affected;      // per slot
  };

  void build_layout(int n_tasks) {
    Layout lay;
    lay.pairs = detail::pair_indices(n_tasks, policy_);
    auto block_of = [&](int coord) -> std::uint16_t {
      return coord < n_tasks ? 1u : 1u << (1 + (coord - n_tasks));
    };
    for (const auto& p : lay.pairs)
      lay.blocks.push_back(block_of(p.a) | block_of(p.b));
    lay.affected.resize(n_slots());
    for (int s = 0; s < n_slots(); ++s)
      for (std::size_t p = 0; p < lay.pairs.size(); ++p)
        if (slot_mask_[s] & lay.blocks[p])
          lay.affected[s].push_back(static_cast<int>(p));
    layout_.emplace(n_tasks, std::move(lay));
  }

  const Layout& layout(const CompiledRespondent& r) const {
    return layout_.at(static_cast<int>(r.tasks.size()));
  }
  std::size_t pair_count(const CompiledRespondent& r) const {
    return layout(r).pairs.size();
  }
  const std::vector<int>& affected_pairs(const CompiledRespondent& r,
                                         int slot) const {
    return layout(r).affected[slot];
  }
  const std::vector<std::uint16_t>& pair_blocks(
      const CompiledRespondent& r) const {
    return layout(r).blocks;
  }

  static std::vector<int>& intersection_scratch() {
    thread_local std::vector<int> scratch;
    return scratch;
  }

  // ---- coordinate workspace ---------------------------------------------------

  struct Workspace {
    std::vector<double> mean, sd, zlo, zhi;
    std::vector<std::array<double, 3>> lambda, lm;  // loadings and L * lambda
    void resize(int n) {
      mean.resize(n);
      sd.resize(n);
      zlo.resize(n);
      zhi.resize(n);
      lambda.assign(n, {0.0, 0.0, 0.0});
      lm.assign(n, {0.0, 0.0, 0.0});
    }
  };

  static Workspace& workspace() {
    thread_local Workspace ws;
    return ws;
  }

  void build_coords(const CompiledRespondent& r, const double* theta,
                    const Shared& sh, Workspace& ws) const {
    const int n_tasks = static_cast<int>(r.tasks.size());
    const int n = n_tasks + kNumIndicators;
    ws.resize(n);

    double xbar[3];
    for (int a = 0; a < 3; ++a) {
      double v = 0.0;
      for (int idx : r.pi[a]) v += theta[idx];
      xbar[a] = v;
    }

    for (int t = 0; t < n_tasks; ++t) {
      const auto& ct = r.tasks[t];
      double mean = 0.0;
      for (const auto& [idx, x] : ct.lin) mean += theta[idx] * x;
      for (const auto& rp : ct.rp)
        mean += theta[rp.beta] * ref_power(rp.d, theta[rp.alpha]);
      auto& lam = ws.lambda[t];
      lam = {0.0, 0.0, 0.0};
      for (const auto& lp : ct.load) lam[lp.latent] += theta[lp.coef] * lp.x;
      for (int a = 0; a < 3; ++a) mean += lam[a] * xbar[a];
      ws.mean[t] = mean;
      ws.zlo[t] = ct.lo;  // standardized below
      ws.zhi[t] = ct.hi;
    }

    for (int q = 0; q < kNumIndicators; ++q) {
      const int coord = n_tasks + q;
      const auto& cm = meas_[q];
      double mean = theta[cm.intercept];
      auto& lam = ws.lambda[coord];
      lam = {0.0, 0.0, 0.0};
      for (int a = 0; a < 3; ++a)
        if (cm.load[a] >= 0) {
          lam[a] = theta[cm.load[a]];
          mean += lam[a] * xbar[a];
        }
      ws.mean[coord] = mean;
      const int cat = r.cat[q];
      ws.zlo[coord] = cat <= 1 ? -kInf : cat == 2 ? 0.0 : theta[cm.psi[cat - 3]];
      ws.zhi[coord] = cat >= 5   ? kInf
                      : cat == 1 ? 0.0
                                 : theta[cm.psi[cat - 2]];
    }

    for (int i = 0; i < n; ++i) {
      auto& lm = ws.lm[i];
      const auto& lam = ws.lambda[i];
      for (int a = 0; a < 3; ++a)
        lm[a] = sh.L[a][0] * lam[0] + sh.L[a][1] * lam[1] + sh.L[a][2] * lam[2];
      const double var =
          lam[0] * lm[0] + lam[1] * lm[1] + lam[2] * lm[2] + 1.0;
      const double sd = std::sqrt(var);
      ws.sd[i] = sd;
      ws.zlo[i] = (ws.zlo[i] - ws.mean[i]) / sd;
      ws.zhi[i] = (ws.zhi[i] - ws.mean[i]) / sd;
    }
  }

  double pair_lp(const Workspace& ws, const detail::PairIndex& p) const {
    const auto& la = ws.lambda[p.a];
    const auto& mb = ws.lm[p.b];
    const double cov = la[0] * mb[0] + la[1] * mb[1] + la[2] * mb[2];
    const double rho = cov / (ws.sd[p.a] * ws.sd[p.b]);
    return detail::guarded_log_rect(ws.zlo[p.a], ws.zhi[p.a], ws.zlo[p.b],
                                    ws.zhi[p.b], rho);
  }

  // Full contribution of one respondent; optionally stores per-pair values.
  double eval_respondent(const CompiledRespondent& r, const double* theta,
                         const Shared& sh, double* out_lp) const {
    Workspace& ws = workspace();
    build_coords(r, theta, sh, ws);
    const auto& lay = layout(r);
    KahanSum sum;
    for (std::size_t p = 0; p < lay.pairs.size(); ++p) {
      const double lp = pair_lp(ws, lay.pairs[p]);
      if (out_lp) out_lp[p] = lp;
      sum.add(lp);
    }
    return sum.value();
  }

  // Contribution of a pair subset only.
  double eval_subset(const CompiledRespondent& r, const double* theta,
                     const Shared& sh, const std::vector<int>& subset) const {
    Workspace& ws = workspace();
    build_coords(r, theta, sh, ws);
    const auto& lay = layout(r);
    KahanSum sum;
    for (int p : subset) sum.add(pair_lp(ws, lay.pairs[p]));
    return sum.value();
  }

  static std::vector<double> perturbed(
      const std::vector<double>& w,
      std::initializer_list<std::pair<int, double>> deltas) {
    std::vector<double> out = w;
    for (const auto& [slot, d] : deltas) out[slot] += d;
    return out;
  }

  // d/dw_s of the objective; optionally per-respondent contributions.
  double slot_derivative(const std::vector<double>& w, int s, double step,
                         std::vector<double>* per_respondent) const {
    const auto vp = table_.unpack(perturbed(w, {{s, step}}));
    const auto vm = table_.unpack(perturbed(w, {{s, -step}}));
    const Shared shp = make_shared(vp), shm = make_shared(vm);
    KahanSum acc;
    for (std::size_t i = 0; i < resp_.size(); ++i) {
      const auto& pairs = affected_pairs(resp_[i], s);
      double d = 0.0;
      if (!pairs.empty()) {
        d = (eval_subset(resp_[i], vp.data(), shp, pairs) -
             eval_subset(resp_[i], vm.data(), shm, pairs)) /
            (2.0 * step);
      }
      if (per_respondent) (*per_respondent)[i] = d;
      acc.add(d);
    }
    return acc.value();
  }

  ModelSpec spec_;
  ParamTable table_;
  PairingPolicy policy_;
  int threads_;
  std::array<CompiledMeasurement, kNumIndicators> meas_{};
  std::vector<CompiledRespondent> resp_;
  std::vector<std::uint16_t> slot_mask_;
  std::map<int, Layout> layout_;
};

}  // namespace refchoice
