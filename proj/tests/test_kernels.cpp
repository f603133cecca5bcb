#include <doctest.h>

#include <omp.h>

#include <array>
#include <random>
#include <vector>

#include "vdasap/kernels.hpp"

using namespace vdasap;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double zero_fraction = 0.0) {
  std::normal_distribution<double> d;
  std::uniform_real_distribution<double> u;
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng) < zero_fraction ? 0.0 : d(rng);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= 1e-12 * (1.0 + std::abs(b[i])));
  }
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("parallel kernels agree with the serial reference") {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    std::mt19937_64 rng(3);
    for (auto [rows, in, out] : std::vector<std::array<int, 3>>{{1, 3, 2}, {7, 100, 80}, {512, 80, 80}, {333, 80, 5}}) {
      CAPTURE(rows);
      CAPTURE(in);
      const auto x = random_vector(static_cast<std::size_t>(rows) * in, rng, 0.3);
      const auto w = random_vector(static_cast<std::size_t>(in) * out, rng);
      const auto b = random_vector(out, rng);
      const auto gy = random_vector(static_cast<std::size_t>(rows) * out, rng);

      std::vector<double> y1(static_cast<std::size_t>(rows) * out), y2(y1.size());
      kernels::dense_forward(x, rows, in, w, b, out, y1);
      kernels::serial::dense_forward(x, rows, in, w, b, out, y2);
      check_close(y1, y2);

      std::vector<double> gx1(x.size()), gx2(x.size());
      kernels::dense_backward_input(gy, rows, in, w, out, gx1);
      kernels::serial::dense_backward_input(gy, rows, in, w, out, gx2);
      check_close(gx1, gx2);

      std::vector<double> gw1(w.size(), 1.0), gw2(w.size(), 1.0), gb1(out, 2.0), gb2(out, 2.0);
      kernels::dense_backward_params(x, gy, rows, in, out, gw1, gb1);
      kernels::serial::dense_backward_params(x, gy, rows, in, out, gw2, gb2);
      check_close(gw1, gw2);
      check_close(gb1, gb2);
    }
    omp_set_num_threads(saved);
  }

  TEST_CASE("parallel kernels are deterministic across thread counts") {
    std::mt19937_64 rng(4);
    const int rows = 256, in = 80, out = 80;
    const auto x = random_vector(rows * in, rng);
    const auto w = random_vector(in * out, rng);
    const auto gy = random_vector(rows * out, rng);
    std::vector<std::vector<double>> results;
    const int saved = omp_get_max_threads();
    for (int threads : {1, 3, 8}) {
      omp_set_num_threads(threads);
      std::vector<double> gw(w.size(), 0.0), gb(out, 0.0);
      kernels::dense_backward_params(x, gy, rows, in, out, gw, gb);
      gw.insert(gw.end(), gb.begin(), gb.end());
      results.push_back(gw);
    }
    omp_set_num_threads(saved);
    CHECK(results[0] == results[1]);
    CHECK(results[0] == results[2]);
  }

  TEST_CASE("relu") {
    std::vector<double> z{-1.0, 0.0, 2.0};
    kernels::relu_forward(z);
    CHECK(z == std::vector<double>{0.0, 0.0, 2.0});
    std::vector<double> g{5.0, 5.0, 5.0};
    kernels::relu_backward(z, g);
    CHECK(g == std::vector<double>{0.0, 0.0, 5.0});
  }
}
