// Times the OpenMP kernels against their serial reference implementations.

#include <chrono>
#include <cstdio>
#include <string>

#include "conelab/parallel.hpp"
#include "conelab/projection_lab.hpp"

namespace cl = conelab;

namespace {

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const std::string& name, double serial, double parallel) {
  std::printf("%-40s serial %8.1f ms   parallel %8.1f ms   speedup %.2fx\n", name.c_str(),
              serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main() {
  std::printf("jobs available: %d\n", cl::current_jobs());
  const cl::Dataset data = cl::Dataset::create(3, 1, {-0.5, 0.5, 1.0});

  for (double step : {5e-2, 2e-2}) {
    cl::CloudSpec spec;
    spec.grid = cl::GridSpec{-20.0, 20.0, step};
    spec.num_random = 200'000;
    spec.seed = 7;
    const cl::ImageCloud cloud(cl::Scheme::toy_lightning(), data, spec);
    cl::Rng rng(3);
    const cl::YVector y = cl::random_unit_label(3, 1, rng);

    const double ts = time_best_of(3, [&] { (void)cl::project_serial(cloud, y); });
    const double tp = time_best_of(3, [&] { (void)cl::project(cloud, y); });
    report("projection scan, " + std::to_string(cloud.size()) + " pts", ts, tp);
  }

  {
    const std::size_t n = 20'000'000;
    auto value = [](std::size_t i) {
      const double x = static_cast<double>(i % 1'000'003) * 1e-6;
      return (x - 0.5) * (x - 0.5) + 1e-9 * static_cast<double>(i % 17);
    };
    double sink = 0.0;
    const double ts = time_best_of(3, [&] { sink += cl::blocked_argmin_serial(n, value).value; });
    const double tp = time_best_of(3, [&] { sink += cl::blocked_argmin_parallel(n, value).value; });
    report("blocked argmin, 2e7 items", ts, tp);
    std::printf("(checksum %g)\n", sink);
  }
  return 0;
}
