// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace hyperg {

struct Maximum {
  double x;
  double value;
};

/// Brent's golden-section / parabolic-interpolation search for a maximum of
/// f inside [lo, hi], started from an interior point `mid` with
/// f(mid) >= max(f(lo), f(hi)).
Maximum brent_maximize(const std::function<double(double)>& f, double lo, double mid, double hi,
                       double tol = 1e-8, int max_iter = 200);

struct Bracket {
  double lo, mid, hi;
  double f_lo, f_mid, f_hi;
  bool hit_lower_cap = false;
  bool hit_upper_cap = false;
};

/// Expands from `center` in steps of `step` until f decreases on both sides
/// or the search reaches |x| = cap. Caps reached are flagged; the returned
/// triple is then not a proper bracket on that side.
Bracket bracket_maximum(const std::function<double(double)>& f, double center, double step,
                        double cap);

struct DerivativeEstimate {
  double value;
  double error;
};

/// Second derivative by Richardson extrapolation of central differences
/// (Ridders' tableau): initial step h, shrink factor 1.4 per stage, at most
/// `max_stages` stages, stopping once the error estimate drops below
/// `tolerance` or starts growing.
DerivativeEstimate ridders_second_derivative(const std::function<double(double)>& f, double x,
                                             double fx, double h = 0.5, int max_stages = 10,
                                             double tolerance = 1e-6);

/// log(sum(exp(values))) with max-shift.
double log_sum_exp(std::span<const double> values);

}  // namespace hyperg
