#pragma once

#include <cmath>
#include <complex>

#include "doctest.h"

namespace kho::test {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }
inline bool near(std::complex<double> a, std::complex<double> b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace kho::test

#define CHECK_NEAR(a, b, tol)                                                     \
  do {                                                                            \
    const auto check_near_a_ = (a);                                               \
    const auto check_near_b_ = (b);                                               \
    INFO("lhs = ", check_near_a_, ", rhs = ", check_near_b_, ", tol = ", (tol)); \
    CHECK(::kho::test::near(check_near_a_, check_near_b_, (tol)));                \
  } while (0)
