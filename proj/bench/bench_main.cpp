// Timing harness for the two hot kernels, each against its plain serial
// reference implementation. Wall-clock medians over repeated runs; a
// checksum per variant guards against the optimizer eliding work and
// doubles as an agreement check.

#include "sdom/harness.hpp"
#include "sdom/reference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

using namespace sdom;

namespace {

struct Timing {
  double median_ms = 0.0;
  double checksum = 0.0;
};

Timing time_runs(int reps, const std::function<GridFn()>& fn) {
  Timing t;
  std::vector<double> ms;
  ms.reserve(std::size_t(reps));
  for (int i = 0; i < reps; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    GridFn out = fn();
    auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    t.checksum = 0.0;
    for (double v : out) t.checksum += v;
  }
  std::sort(ms.begin(), ms.end());
  t.median_ms = ms[ms.size() / 2];
  return t;
}

void row(const char* name, const Timing& opt, const Timing& ref) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   checksum drift %.3g\n", name, opt.median_ms,
              ref.median_ms, ref.median_ms / std::max(opt.median_ms, 1e-9),
              std::fabs(opt.checksum - ref.checksum) /
                  std::max(1.0, std::fabs(ref.checksum)));
}

} // namespace

int main(int argc, char** argv) {
  int m1 = argc > 1 ? std::atoi(argv[1]) : 10; // 1D resolution
  int m2 = argc > 2 ? std::atoi(argv[2]) : 5;  // 2D resolution
  int reps = argc > 3 ? std::atoi(argv[3]) : 5;
  std::printf("%-28s %13s %13s %9s\n", "kernel", "optimized", "reference", "speedup");

  {
    Grid g = build_grid(1, 4.0, m1);
    Domain dom = build_domain(g);
    OmegaKernel k = OmegaKernel::make_1d(1.0);
    GridFn f = make_probes(g, 0, 0, 1, 11)[0];
    GridFn h = f;
    for (double& v : h) v = std::fabs(v);
    std::string tag1 = "singular transform 1d m=" + std::to_string(m1);
    row(tag1.c_str(), time_runs(reps, [&] { return apply_t_omega(g, k, f); }),
        time_runs(reps, [&] { return reference::apply_t_omega(g, k, f); }));
    Young psi = Young::llogl();
    std::string tag2 = "orlicz maximal 1d m=" + std::to_string(m1);
    row(tag2.c_str(), time_runs(reps, [&] { return maximal_fn(dom, h, psi); }),
        time_runs(reps, [&] { return reference::maximal_fn(dom, h, psi); }));
  }

  {
    Grid g = build_grid(2, 4.0, m2);
    Domain dom = build_domain(g);
    std::vector<double> sect(16);
    for (int i = 0; i < 16; ++i) sect[std::size_t(i)] = i % 2 == 0 ? 1.0 : -1.0;
    OmegaKernel k = OmegaKernel::make_2d(sect);
    GridFn f = make_probes(g, 0, 0, 1, 11)[0];
    GridFn h = f;
    for (double& v : h) v = std::fabs(v);
    std::string tag1 = "singular transform 2d m=" + std::to_string(m2);
    row(tag1.c_str(), time_runs(reps, [&] { return apply_t_omega(g, k, f); }),
        time_runs(reps, [&] { return reference::apply_t_omega(g, k, f); }));
    Young psi = Young::llogl();
    std::string tag2 = "orlicz maximal 2d m=" + std::to_string(m2);
    row(tag2.c_str(), time_runs(reps, [&] { return maximal_fn(dom, h, psi); }),
        time_runs(reps, [&] { return reference::maximal_fn(dom, h, psi); }));
  }

  return 0;
}
