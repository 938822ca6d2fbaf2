#include "lamp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace lamp {

double central_diff(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

double rel_err(double analytic, double numeric) {
  double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
  return std::fabs(analytic - numeric) / denom;
}

namespace {

real* locate(MlpParams& p, const ParamRef& r) {
  if (r.layer >= p.layers.size()) throw UsageError("finite_diff_check: bad layer index");
  Tensor& t = r.bias ? p.layers[r.layer].b : p.layers[r.layer].w;
  if (r.index >= t.size()) throw UsageError("finite_diff_check: bad param index");
  return &t.data[r.index];
}

real locate_grad(const MlpGrads& g, const ParamRef& r) {
  const Tensor& t = r.bias ? g.layers[r.layer].b : g.layers[r.layer].w;
  return t.data[r.index];
}

}  // namespace

double finite_diff_check(const std::function<double()>& loss, MlpParams& p,
                         const MlpGrads& analytic, const std::vector<ParamRef>& probes,
                         double eps) {
  double worst = 0.0;
  for (const ParamRef& r : probes) {
    real* slot = locate(p, r);
    const real saved = *slot;
    *slot = saved + static_cast<real>(eps);
    const double fp = loss();
    *slot = saved - static_cast<real>(eps);
    const double fm = loss();
    *slot = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    worst = std::max(worst, rel_err(static_cast<double>(locate_grad(analytic, r)), numeric));
  }
  return worst;
}

std::vector<ParamRef> all_params(const MlpParams& p) {
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (std::size_t i = 0; i < p.layers[l].w.size(); ++i) out.push_back({l, false, i});
    for (std::size_t i = 0; i < p.layers[l].b.size(); ++i) out.push_back({l, true, i});
  }
  return out;
}

std::vector<ParamRef> sample_params(const MlpParams& p, std::size_t n, Rng& rng) {
  std::vector<ParamRef> all = all_params(p);
  if (all.size() <= n) return all;
  // Partial Fisher-Yates: the first n entries become the sample.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + rng.uniform_int(all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(n);
  return all;
}

}  // namespace lamp
