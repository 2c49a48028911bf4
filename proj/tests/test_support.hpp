// Small helpers shared by the unit tests. Oracles live in the test files.
#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

namespace test {

constexpr double pi = std::numbers::pi;

// Composite Simpson rule, used as an oracle independent of the library quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

inline double simpson2(const std::function<double(double, double)>& f, double a0, double a1, double b0, double b1,
                       int n = 400) {
  return simpson([&](double x) { return simpson([&](double y) { return f(x, y); }, b0, b1, n); }, a0, a1, n);
}

} // namespace test
