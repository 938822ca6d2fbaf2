#pragma once

#include <functional>

#include "lamp/mlp.hpp"

namespace lamp {

// Central difference df/dx at x. 64-bit only: in float builds the subtraction
// cancels and the result is noise, so callers should gate on sizeof(real).
double central_diff(const std::function<double(double)>& f, double x,
                    double eps = 1e-5);

// Relative error with the usual max(|a|,|n|,tiny) denominator.
double rel_err(double analytic, double numeric);

// Addresses one scalar inside an MlpParams.
struct ParamRef {
  std::size_t layer;
  bool bias;
  std::size_t index;
};

// Compares analytic grads against central differences of `loss` (which must
// read `p` by reference) at the probed coordinates. Returns the max relative
// error. `p` is restored exactly afterwards.
double finite_diff_check(const std::function<double()>& loss, MlpParams& p,
                         const MlpGrads& analytic, const std::vector<ParamRef>& probes,
                         double eps = 1e-5);

// Probe every coordinate (fine for the small nets used in tests).
std::vector<ParamRef> all_params(const MlpParams& p);
// Deterministic subsample of coordinates, at most `n`.
std::vector<ParamRef> sample_params(const MlpParams& p, std::size_t n, Rng& rng);

}  // namespace lamp
