#include <doctest.h>

#include <random>
#include <vector>

#include "esv/kernels.hpp"
#include "esv/random.hpp"

using namespace esv;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 4.0 * unit_draw(rng) - 2.0;
  return v;
}

const std::vector<size_t> kLengths = {0, 1, 2, 3, 4, 7, 8, 15, 31, 64, 100, 257};

}  // namespace

TEST_CASE("scalar dot matches a plain loop") {
  std::mt19937_64 rng(11);
  for (size_t n : kLengths) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    double want = 0.0;
    for (size_t i = 0; i < n; ++i) want += a[i] * b[i];
    double got = kern::scalar_backend().dot(a.data(), b.data(), n);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("active backend agrees with scalar") {
  const auto& scalar = kern::scalar_backend();
  const auto& active = kern::active_backend();
  INFO("active backend: ", active.name);
  std::mt19937_64 rng(23);
  for (size_t n : kLengths) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);

    double d0 = scalar.dot(a.data(), b.data(), n);
    double d1 = active.dot(a.data(), b.data(), n);
    CHECK(d1 == doctest::Approx(d0).epsilon(1e-12));

    auto y0 = random_vec(rng, n);
    auto y1 = y0;
    scalar.axpy(0.37, a.data(), y0.data(), n);
    active.axpy(0.37, a.data(), y1.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-12));

    auto s0 = a;
    auto s1 = a;
    scalar.scal(-1.25, s0.data(), n);
    active.scal(-1.25, s1.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(s1[i] == s0[i]);

    auto r0 = b;
    auto r1 = b;
    scalar.relu(r0.data(), n);
    active.relu(r1.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(r1[i] == r0[i]);
  }
}

TEST_CASE("relu clamps negatives only") {
  std::vector<double> v = {-1.0, 0.0, 2.5, -0.0, 1e-300, -1e-300};
  kern::active_backend().relu(v.data(), v.size());
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 2.5);
  CHECK(v[3] == 0.0);
  CHECK(v[4] == 1e-300);
  CHECK(v[5] == 0.0);
}

TEST_CASE("gemv computes w x + b per row") {
  std::mt19937_64 rng(31);
  for (size_t rows : {1, 3, 8}) {
    for (size_t cols : {1, 4, 9, 33}) {
      auto w = random_vec(rng, rows * cols);
      auto x = random_vec(rng, cols);
      auto b = random_vec(rng, rows);
      std::vector<double> y(rows);
      kern::gemv(kern::active_backend(), w.data(), rows, cols, x.data(), b.data(), y.data());
      for (size_t r = 0; r < rows; ++r) {
        double want = b[r];
        for (size_t c = 0; c < cols; ++c) want += w[r * cols + c] * x[c];
        CHECK(y[r] == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}
