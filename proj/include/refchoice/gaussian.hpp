#pragma once

// Scalar Gaussian kernels: univariate pdf/cdf/quantile and the bivariate
// rectangle probabilities that every pairwise likelihood term reduces to.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace refchoice {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kSqrtTwoPi = 2.5066282746310005024157652848110;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Floor applied to rectangle probabilities before they are logged, so that
// extreme parameter trials during line search keep the objective finite.
inline constexpr double kProbFloor = 1e-300;

inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrtTwoPi; }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// Inverse normal CDF, algorithm AS241 (Wichura 1988), ~1 ulp over (0,1).
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p must be in (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

namespace detail {

// Gauss-Legendre node/weight pairs used by the bivariate normal quadrature
// (Drezner & Wesolowsky 1990 as refined by Genz 2004).
inline constexpr double kGLw6[3] = {0.1713244923791704, 0.3607615730481386,
                                    0.4679139345726910};
inline constexpr double kGLx6[3] = {0.9324695142031521, 0.6612093864662645,
                                    0.2386191860831969};
inline constexpr double kGLw12[6] = {0.04717533638651183, 0.1069393259953184,
                                     0.1600783285433462,  0.2031674267230659,
                                     0.2334925365383548,  0.2491470458134028};
inline constexpr double kGLx12[6] = {0.9815606342467192, 0.9041172563704749,
                                     0.7699026741943047, 0.5873179542866175,
                                     0.3678314989981802, 0.1252334085114689};
inline constexpr double kGLw20[10] = {0.01761400713915212, 0.04060142980038694,
                                      0.06267204833410907, 0.08327674157670475,
                                      0.1019301198172404,  0.1181945319615184,
                                      0.1316886384491766,  0.1420961093183820,
                                      0.1491729864726037,  0.1527533871307258};
inline constexpr double kGLx20[10] = {0.9931285991850949,  0.9639719272779138,
                                      0.9122344282513259,  0.8391169718222188,
                                      0.7463319064601508,  0.6360536807265150,
                                      0.5108670019508271,  0.3737060887154195,
                                      0.2277858511416451,  0.07652652113349734};

// Upper-orthant probability P(X > dh, Y > dk) for finite limits, |r| < 1.
inline double bvnu(double dh, double dk, double r) {
  const double* x;
  const double* w;
  int lg;
  const double ar = std::fabs(r);
  if (ar < 0.3) {
    lg = 3;
    x = kGLx6;
    w = kGLw6;
  } else if (ar < 0.75) {
    lg = 6;
    x = kGLx12;
    w = kGLw12;
  } else {
    lg = 10;
    x = kGLx20;
    w = kGLw20;
  }

  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  if (ar < 0.925) {
    if (ar > 0.0) {
      const double hs = 0.5 * (h * h + k * k);
      const double asr = std::asin(r);
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(0.5 * asr * (is * x[i] + 1.0));
          bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn *= asr / (2.0 * kTwoPi);
    }
    bvn += norm_cdf(-h) * norm_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -0.5 * (bs / as + hk);
      if (asr > -100.0)
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 +
               c * d * as * as / 5.0);
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-0.5 * hk) * kSqrtTwoPi * norm_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a *= 0.5;
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          double xs = a * (is * x[i] + 1.0);
          xs *= xs;
          const double rs = std::sqrt(1.0 - xs);
          asr = -0.5 * (bs / xs + hk);
          if (asr > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + d * xs);
            const double ep =
                std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
            bvn += a * w[i] * std::exp(asr) * (ep - sp);
          }
        }
      }
      bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
      bvn += norm_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) {
        if (h < 0.0)
          bvn += norm_cdf(k) - norm_cdf(h);
        else
          bvn += norm_cdf(-h) - norm_cdf(-k);
      }
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

}  // namespace detail

// Bivariate normal CDF P(Z1 <= h, Z2 <= k) with correlation rho, absolute
// accuracy ~5e-16. Infinite limits are allowed.
inline double binorm_cdf(double h, double k, double rho) {
  if (!(std::fabs(rho) < 1.0))
    throw std::domain_error("binorm_cdf: |rho| must be < 1");
  if (std::isnan(h) || std::isnan(k))
    throw std::domain_error("binorm_cdf: NaN limit");
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf && k == kInf) return 1.0;
  if (h == kInf) return norm_cdf(k);
  if (k == kInf) return norm_cdf(h);
  if (rho == 0.0) return norm_cdf(h) * norm_cdf(k);
  return detail::bvnu(-h, -k, rho);
}

// Axis-aligned rectangle (lo1, hi1] x (lo2, hi2] under a standard bivariate
// normal with correlation rho. Infinite bounds allowed.
struct Rect2 {
  double lo1, hi1;
  double lo2, hi2;
  double rho;
};

namespace detail {

// Rectangle probability with the quadrature setup (node selection, asin,
// sine grid) shared across the four corners. Only valid on the small-to-
// moderate correlation branch.
inline double rect_prob_shared(const Rect2& r) {
  const double* x;
  const double* w;
  int lg;
  const double ar = std::fabs(r.rho);
  if (ar < 0.3) {
    lg = 3;
    x = kGLx6;
    w = kGLw6;
  } else if (ar < 0.75) {
    lg = 6;
    x = kGLx12;
    w = kGLw12;
  } else {
    lg = 10;
    x = kGLx20;
    w = kGLw20;
  }
  const double asr = std::asin(r.rho);
  double sn[20], inv[20];
  for (int i = 0; i < lg; ++i) {
    const double s1 = std::sin(0.5 * asr * (1.0 - x[i]));
    const double s2 = std::sin(0.5 * asr * (1.0 + x[i]));
    sn[2 * i] = s1;
    sn[2 * i + 1] = s2;
    inv[2 * i] = 1.0 / (1.0 - s1 * s1);
    inv[2 * i + 1] = 1.0 / (1.0 - s2 * s2);
  }
  const double scale = asr / (2.0 * kTwoPi);

  // Phi2(h,k) = Phi(h)Phi(k) + quadrature; the quadrature term is invariant
  // under (h,k) -> (-h,-k), so the lower-orthant form reuses it directly.
  auto corner = [&](double h, double k) -> double {
    if (h == -kInf || k == -kInf) return 0.0;
    if (h == kInf) return k == kInf ? 1.0 : norm_cdf(k);
    if (k == kInf) return norm_cdf(h);
    const double hk = h * k;
    const double hs = 0.5 * (h * h + k * k);
    double sum = 0.0;
    for (int i = 0; i < 2 * lg; ++i)
      sum += w[i >> 1] * std::exp((sn[i] * hk - hs) * inv[i]);
    return norm_cdf(h) * norm_cdf(k) + sum * scale;
  };

  const double p = corner(r.hi1, r.hi2) - corner(r.lo1, r.hi2) -
                   corner(r.hi1, r.lo2) + corner(r.lo1, r.lo2);
  return p;
}

}  // namespace detail

inline double rect_prob(const Rect2& r) {
  if (!(r.lo1 < r.hi1) || !(r.lo2 < r.hi2))
    throw std::domain_error("rect_prob: lower bound must be below upper");
  if (!(std::fabs(r.rho) < 1.0))
    throw std::domain_error("rect_prob: |rho| must be < 1");
  double p;
  if (r.rho == 0.0) {
    p = (norm_cdf(r.hi1) - norm_cdf(r.lo1)) *
        (norm_cdf(r.hi2) - norm_cdf(r.lo2));
  } else if (std::fabs(r.rho) < 0.925) {
    p = detail::rect_prob_shared(r);
  } else {
    p = binorm_cdf(r.hi1, r.hi2, r.rho) - binorm_cdf(r.lo1, r.hi2, r.rho) -
        binorm_cdf(r.hi1, r.lo2, r.rho) + binorm_cdf(r.lo1, r.lo2, r.rho);
  }
  return std::clamp(p, kProbFloor, 1.0);
}

inline double log_rect_prob(const Rect2& r) { return std::log(rect_prob(r)); }

}  // namespace refchoice
