#pragma once

#include <cmath>
#include <random>

#include "qgerbe/quat.hpp"

namespace qgerbe {

using Rng = std::mt19937_64;

/// Standard Gaussian in each component.
inline Quatd random_quat(Rng& rng)
{
  std::normal_distribution<double> n(0.0, 1.0);
  const double w = n(rng);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return {w, x, y, z};
}

/// Uniform on the unit 3-sphere.
inline Quatd random_versor(Rng& rng)
{
  for (;;) {
    const Quatd q = random_quat(rng);
    if (q.norm() > 1e-3)
      return q.normalized();
  }
}

/// A versor scaled by exp(U(-spread, spread)); never close to zero.
inline Quatd random_nonzero_quat(Rng& rng, double spread = 1.0)
{
  std::uniform_real_distribution<double> u(-spread, spread);
  const Quatd v = random_versor(rng);
  return v * std::exp(u(rng));
}

} // namespace qgerbe
