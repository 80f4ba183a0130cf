#pragma once

// Central finite-difference verification of tape gradients. The loss callback
// must rebuild the forward pass from the store's current values, because the
// checker perturbs parameters in place between calls.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "dgm/params.hpp"
#include "dgm/rng.hpp"

namespace gradcheck {

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / denom;
}

struct Report {
  double max_rel_err = 0;
  int coords_checked = 0;
};

// Compares analytic gradients (taken once, up front) against central
// differences on `coords` randomly chosen parameter coordinates.
template <typename Real, typename Loss, typename Analytic>
Report run(dgm::ParameterStore<Real>& store, Loss&& loss, Analytic&& analytic_grads, int coords,
           dgm::Rng& rng, double eps = 1e-4) {
  const auto grads = analytic_grads();

  std::vector<std::pair<std::size_t, int>> flat;
  for (std::size_t e = 0; e < store.entry_count(); ++e)
    for (int k = 0; k < store.at(e).value.size(); ++k) flat.emplace_back(e, k);

  Report report;
  for (int c = 0; c < coords; ++c) {
    const auto [e, k] = flat[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(flat.size()) - 1))];
    Real& slot = store.at(e).value[k];
    const Real orig = slot;
    slot = orig + Real(eps);
    const double up = loss();
    slot = orig - Real(eps);
    const double down = loss();
    slot = orig;
    const double numeric = (up - down) / (2 * eps);
    const double analytic = double(grads.at(e)[k]);
    report.max_rel_err = std::max(report.max_rel_err, rel_err(analytic, numeric));
    ++report.coords_checked;
  }
  return report;
}

}  // namespace gradcheck
