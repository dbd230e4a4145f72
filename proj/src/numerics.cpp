// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/numerics.hpp"

#include "hyperg/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace hyperg {

namespace {

double finite_or_neg_inf(double v) {
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

}  // namespace

Maximum brent_maximize(const std::function<double(double)>& f, double lo, double mid, double hi,
                       double tol, int max_iter) {
  constexpr double kGolden = 0.3819660112501051;
  constexpr double kZeps = 1e-12;
  auto g = [&f](double x) { return -finite_or_neg_inf(f(x)); };

  double a = std::min(lo, hi);
  double b = std::max(lo, hi);
  double x = mid, w = mid, v = mid;
  double fx = g(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + kZeps;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm) ? a - x : b - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d);
    const double fu = g(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, -fx};
}

Bracket bracket_maximum(const std::function<double(double)>& f, double center, double step,
                        double cap) {
  auto eval = [&f](double x) { return finite_or_neg_inf(f(x)); };
  center = std::clamp(center, -cap + step, cap - step);
  Bracket br{center - step, center, center + step, 0.0, 0.0, 0.0};
  br.f_lo = eval(br.lo);
  br.f_mid = eval(br.mid);
  br.f_hi = eval(br.hi);
  while (br.f_hi > br.f_mid) {
    if (br.hi >= cap) {
      br.hit_upper_cap = true;
      break;
    }
    br.lo = br.mid; br.f_lo = br.f_mid;
    br.mid = br.hi; br.f_mid = br.f_hi;
    br.hi = std::min(br.hi + step, cap);
    br.f_hi = eval(br.hi);
  }
  while (!br.hit_upper_cap && br.f_lo > br.f_mid) {
    if (br.lo <= -cap) {
      br.hit_lower_cap = true;
      break;
    }
    br.hi = br.mid; br.f_hi = br.f_mid;
    br.mid = br.lo; br.f_mid = br.f_lo;
    br.lo = std::max(br.lo - step, -cap);
    br.f_lo = eval(br.lo);
  }
  return br;
}

DerivativeEstimate ridders_second_derivative(const std::function<double(double)>& f, double x,
                                             double fx, double h, int max_stages,
                                             double tolerance) {
  constexpr double kCon = 1.4;
  constexpr double kCon2 = kCon * kCon;
  constexpr double kSafe = 2.0;
  constexpr int kMax = 16;
  if (!(h > 0.0)) throw DomainError("ridders_second_derivative: step must be positive");
  max_stages = std::clamp(max_stages, 1, kMax);

  std::array<std::array<double, kMax>, kMax> a{};
  auto central = [&](double hh) { return (f(x + hh) - 2.0 * fx + f(x - hh)) / (hh * hh); };
  double hh = h;
  a[0][0] = central(hh);
  DerivativeEstimate best{a[0][0], std::numeric_limits<double>::max()};
  for (int i = 1; i < max_stages; ++i) {
    hh /= kCon;
    a[0][static_cast<std::size_t>(i)] = central(hh);
    double fac = kCon2;
    for (int j = 1; j <= i; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const auto iu = static_cast<std::size_t>(i);
      a[ju][iu] = (a[ju - 1][iu] * fac - a[ju - 1][iu - 1]) / (fac - 1.0);
      fac *= kCon2;
      const double errt = std::max(std::abs(a[ju][iu] - a[ju - 1][iu]),
                                   std::abs(a[ju][iu] - a[ju - 1][iu - 1]));
      if (errt <= best.error) {
        best = {a[ju][iu], errt};
      }
    }
    const auto iu = static_cast<std::size_t>(i);
    if (best.error < tolerance) break;
    if (std::abs(a[iu][iu] - a[iu - 1][iu - 1]) >= kSafe * best.error) break;
  }
  return best;
}

double log_sum_exp(std::span<const double> values) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : values) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

}  // namespace hyperg
