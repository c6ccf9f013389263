#pragma once

#include <gtest/gtest.h>

#include "qgerbe/quat.hpp"
#include "qgerbe/random.hpp"

namespace qgerbe::test {

inline ::testing::AssertionResult quat_near(const Quatd& got, const Quatd& want, double tol)
{
  const double d = (got - want).norm();
  if (d <= tol)
    return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "got " << got << ", want " << want << " (distance " << d << ")";
}

inline ::testing::AssertionResult matrix_near(const Matrix4d& got, const Matrix4d& want, double tol)
{
  const double d = (got - want).norm();
  if (d <= tol)
    return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "distance " << d << "\ngot\n" << got << "\nwant\n" << want;
}

/// Equal up to sign, as for versors and normalized factor pairs.
inline ::testing::AssertionResult quat_near_up_to_sign(const Quatd& got, const Quatd& want, double tol)
{
  const double d = std::min((got - want).norm(), (got + want).norm());
  if (d <= tol)
    return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "got " << got << ", want +-" << want << " (distance " << d << ")";
}

} // namespace qgerbe::test
