#pragma once

// Central finite-difference check of the analytic autoencoder gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gtfs2vec/autoencoder.hpp"

namespace testing_support {

struct gradient_report {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps
// parameters whose true gradient is (numerically) zero from turning
// round-off into a huge ratio; at eps = 1e-5 the difference quotient
// carries about 1e-11 of round-off, far below floor * 1e-4.
inline constexpr double gradient_floor = 1e-6;

inline gradient_report gradient_check(gtfs2vec::layer_set const& model,
                                      gtfs2vec::matrix const& batch,
                                      double eps) {
  using namespace gtfs2vec;
  auto const analytic = gradients(model, batch).grads;
  std::vector<double> a;
  auto copy = analytic;
  copy.for_each_parameter([&](double& g) { a.push_back(g); });

  gradient_report r;
  auto probe = model;
  std::vector<double*> params;
  probe.for_each_parameter([&](double& p) { params.push_back(&p); });
  auto eval = [&] {
    return loss(batch, detail::forward_batch(probe, batch).reconstruction);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    double const saved = *params[i];
    *params[i] = saved + eps;
    double const up = eval();
    *params[i] = saved - eps;
    double const down = eval();
    *params[i] = saved;
    double const numeric = (up - down) / (2.0 * eps);
    double const abs_err = std::abs(numeric - a[i]);
    double const rel =
        abs_err / std::max({std::abs(numeric), std::abs(a[i]), gradient_floor});
    if (rel > r.max_relative_error) {
      r.max_relative_error = rel;
      r.worst_index = i;
    }
    r.max_absolute_error = std::max(r.max_absolute_error, abs_err);
    ++r.checked;
  }
  return r;
}

}  // namespace testing_support
