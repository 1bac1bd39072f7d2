#pragma once

// Named parameter vector derived from a ModelSpec, with the bijection between
// the constrained scale (curvatures positive, thresholds increasing, error
// correlations a valid correlation matrix) and the unconstrained scale the
// optimizer works on. Parameters tied across categories share one name and
// therefore one unconstrained slot; fixed parameters occupy no slot at all.

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "refchoice/modelspec.hpp"

namespace refchoice {

enum class ParamKind {
  plain,        // identity transform
  curvature,    // positive, log transform
  threshold,    // member of an increasing block, gap-log transform
  correlation,  // member of the 3x3 correlation block
};

struct ParamInfo {
  std::string name;
  ParamKind kind = ParamKind::plain;
  bool fixed = false;
  double fixed_value = 0.0;
  int slot = -1;        // index on the unconstrained scale, -1 when fixed
  int block = -1;       // threshold: indicator index; correlation: pair index
  int position = 0;     // threshold: 2..4 within its block
};

// Values aligned with ParamTable order, constrained scale.
using ParamValues = std::vector<double>;

class ParamTable {
 public:
  ParamTable() = default;

  explicit ParamTable(const ModelSpec& spec) {
    spec.validate();
    std::map<std::string, double> fixed;
    for (const auto& c : spec.constraints) fixed[c.name] = c.value;

    auto add = [&](const std::string& name, ParamKind kind, int block = -1,
                   int position = 0) {
      auto it = index_.find(name);
      if (it != index_.end()) {
        if (params_[it->second].kind != kind)
          throw ValidationError("parameter '" + name +
                                "' used in incompatible roles");
        return;
      }
      ParamInfo info;
      info.name = name;
      info.kind = kind;
      info.block = block;
      info.position = position;
      if (auto f = fixed.find(name); f != fixed.end()) {
        info.fixed = true;
        info.fixed_value = f->second;
      }
      index_[name] = static_cast<int>(params_.size());
      params_.push_back(std::move(info));
    };

    for (const auto& t : spec.terms) {
      add(t.coef, ParamKind::plain);
      if (t.kind == Term::Kind::ref_power)
        add(t.curvature, ParamKind::curvature);
    }
    for (const auto& s : spec.structural) add(s.coef, ParamKind::plain);
    for (const auto& m : spec.measurement) {
      for (const auto& [r, name] : m.loadings) add(name, ParamKind::plain);
      add(m.intercept, ParamKind::plain);
      for (int pos = 2; pos <= kNumThresholds; ++pos)
        add(m.threshold_block + "_" + std::to_string(pos),
            ParamKind::threshold, m.indicator, pos);
    }
    corr_param_.fill(-1);
    for (const auto& c : spec.correlations) {
      const int pair = pair_index(c.latent_a, c.latent_b);
      add(c.coef, ParamKind::correlation, pair);
      corr_param_[pair] = index_.at(c.coef);
    }

    // The correlation block transforms jointly; partial fixing has no
    // unconstrained counterpart.
    int corr_fixed = 0, corr_present = 0;
    for (int p = 0; p < 3; ++p)
      if (corr_param_[p] >= 0) {
        ++corr_present;
        if (params_[corr_param_[p]].fixed) ++corr_fixed;
      }
    if (corr_fixed != 0 && corr_fixed != corr_present)
      throw ValidationError(
          "error correlations must be all free or all fixed");
    corr_free_ = corr_present > 0 && corr_fixed == 0;

    for (const auto& [name, value] : fixed)
      if (!index_.count(name))
        throw ValidationError("constraint on unknown parameter '" + name + "'");

    int slot = 0;
    for (auto& p : params_)
      if (!p.fixed) p.slot = slot++;
    n_slots_ = slot;
  }

  std::size_t size() const { return params_.size(); }
  int n_slots() const { return n_slots_; }
  const ParamInfo& info(int i) const { return params_[i]; }
  const std::vector<ParamInfo>& infos() const { return params_; }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  int index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ValidationError("unknown parameter '" + name + "'");
    return it->second;
  }

  double get(const ParamValues& v, const std::string& name) const {
    return v[index(name)];
  }
  void set(ParamValues& v, const std::string& name, double value) const {
    v[index(name)] = value;
  }

  static int pair_index(int a, int b) {  // (0,1)->0 (0,2)->1 (1,2)->2
    if (a == 0 && b == 1) return 0;
    if (a == 0 && b == 2) return 1;
    return 2;
  }

  ParamValues make_values() const {
    ParamValues v(params_.size(), 0.0);
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].fixed) v[i] = params_[i].fixed_value;
    return v;
  }

  // 3x3 correlation matrix entries (rho12, rho13, rho23); absent entries are 0.
  std::array<double, 3> correlations(const ParamValues& v) const {
    std::array<double, 3> rho{0.0, 0.0, 0.0};
    for (int p = 0; p < 3; ++p)
      if (corr_param_[p] >= 0) rho[p] = v[corr_param_[p]];
    return rho;
  }

  void validate_values(const ParamValues& v) const {
    if (v.size() != params_.size())
      throw ValidationError("parameter vector has wrong length");
    std::map<int, std::array<double, kNumThresholds + 1>> thresholds;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& p = params_[i];
      if (!std::isfinite(v[i]))
        throw ValidationError("parameter '" + p.name + "' is not finite");
      if (p.fixed && v[i] != p.fixed_value)
        throw ValidationError("fixed parameter '" + p.name +
                              "' does not hold its constrained value");
      if (p.kind == ParamKind::curvature && !(v[i] > 0.0))
        throw ValidationError("curvature '" + p.name + "' must be positive");
      if (p.kind == ParamKind::threshold)
        thresholds[p.block][p.position] = v[i];
    }
    for (auto& [ind, psi] : thresholds) {
      psi[1] = 0.0;
      for (int pos = 2; pos <= kNumThresholds; ++pos)
        if (!(psi[pos] > psi[pos - 1]))
          throw ValidationError("thresholds of indicator " +
                                indicator_name(ind) +
                                " are not strictly increasing");
    }
    if (corr_free_ || corr_param_[0] >= 0) {
      const auto rho = correlations(v);
      // PD check for the implied 3x3 correlation matrix.
      const double det = 1.0 - rho[0] * rho[0] - rho[1] * rho[1] -
                         rho[2] * rho[2] + 2.0 * rho[0] * rho[1] * rho[2];
      for (double r : rho)
        if (!(std::fabs(r) < 1.0))
          throw ValidationError("error correlation outside (-1,1)");
      if (!(det > 0.0))
        throw ValidationError("error correlation matrix not positive definite");
    }
  }

  // ---- transforms -----------------------------------------------------------

  std::vector<double> pack(const ParamValues& v) const {
    validate_values(v);
    std::vector<double> w(n_slots_, 0.0);
    // threshold blocks need their neighbours, correlations need each other
    std::array<double, 3> cw{};
    bool have_cw = false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& p = params_[i];
      if (p.fixed) continue;
      switch (p.kind) {
        case ParamKind::plain:
          w[p.slot] = v[i];
          break;
        case ParamKind::curvature:
          w[p.slot] = std::log(v[i]);
          break;
        case ParamKind::threshold: {
          const double prev =
              p.position == 2 ? 0.0 : v[i - 1];  // blocks are contiguous
          w[p.slot] = std::log(v[i] - prev);
          break;
        }
        case ParamKind::correlation: {
          if (!have_cw) {
            cw = corr_to_unconstrained(correlations(v));
            have_cw = true;
          }
          w[p.slot] = cw[p.block];
          break;
        }
      }
    }
    return w;
  }

  ParamValues unpack(const std::vector<double>& w) const {
    if (static_cast<int>(w.size()) != n_slots_)
      throw ValidationError("unconstrained vector has wrong length");
    for (double x : w)
      if (!std::isfinite(x))
        throw ValidationError("unconstrained vector is not finite");
    ParamValues v = make_values();
    std::array<double, 3> cw{0.0, 0.0, 0.0};
    bool corr_seen = false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& p = params_[i];
      if (p.fixed) continue;
      switch (p.kind) {
        case ParamKind::plain:
          v[i] = w[p.slot];
          break;
        case ParamKind::curvature:
          v[i] = std::exp(w[p.slot]);
          break;
        case ParamKind::threshold: {
          const double prev = p.position == 2 ? 0.0 : v[i - 1];
          v[i] = prev + std::exp(w[p.slot]);
          break;
        }
        case ParamKind::correlation:
          cw[p.block] = w[p.slot];
          corr_seen = true;
          break;
      }
    }
    if (corr_seen) {
      const auto rho = corr_from_unconstrained(cw);
      for (int pbi = 0; pbi < 3; ++pbi)
        if (corr_param_[pbi] >= 0 && !params_[corr_param_[pbi]].fixed)
          v[corr_param_[pbi]] = rho[pbi];
    }
    return v;
  }

  // Unit-diagonal Cholesky parameterization of the correlation matrix:
  // row2 = (w0, 1)/|.|, row3 = (w1, w2, 1)/|.|.
  static std::array<double, 3> corr_to_unconstrained(
      const std::array<double, 3>& rho) {
    // Cholesky of [[1, r12, r13], [r12, 1, r23], [r13, r23, 1]]
    const double l21 = rho[0];
    const double l22 = std::sqrt(1.0 - l21 * l21);
    const double l31 = rho[1];
    const double l32 = (rho[2] - l31 * l21) / l22;
    const double t = 1.0 - l31 * l31 - l32 * l32;
    if (!(t > 0.0))
      throw ValidationError("correlation matrix not positive definite");
    const double l33 = std::sqrt(t);
    return {l21 / l22, l31 / l33, l32 / l33};
  }

  static std::array<double, 3> corr_from_unconstrained(
      const std::array<double, 3>& w) {
    const double s2 = std::sqrt(1.0 + w[0] * w[0]);
    const double l21 = w[0] / s2, l22 = 1.0 / s2;
    const double s3 = std::sqrt(1.0 + w[1] * w[1] + w[2] * w[2]);
    const double l31 = w[1] / s3, l32 = w[2] / s3;
    return {l21, l31, l21 * l31 + l22 * l32};
  }

  // ---- JSON -----------------------------------------------------------------

  nlohmann::json to_json(const ParamValues& v) const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < params_.size(); ++i) j[params_[i].name] = v[i];
    return j;
  }

  ParamValues from_json(const nlohmann::json& j) const {
    ParamValues v = make_values();
    for (const auto& [name, value] : j.items()) {
      auto it = index_.find(name);
      if (it == index_.end())
        throw ValidationError("parameter file names unknown parameter '" +
                              name + "'");
      if (params_[it->second].fixed) continue;  // constrained value wins
      v[it->second] = value.get<double>();
    }
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (!params_[i].fixed && !j.contains(params_[i].name))
        throw ValidationError("parameter file missing '" + params_[i].name +
                              "'");
    validate_values(v);
    return v;
  }

 private:
  std::vector<ParamInfo> params_;
  std::unordered_map<std::string, int> index_;
  std::array<int, 3> corr_param_{-1, -1, -1};
  bool corr_free_ = false;
  int n_slots_ = 0;
};

}  // namespace refchoice
