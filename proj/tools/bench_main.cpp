// Compares the serial and OpenMP execution of the data-parallel kernels on
// fixed workloads and checks that both produce bitwise-identical results.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "jeffmix/fisher.hpp"
#include "jeffmix/harness.hpp"

using namespace jeffmix;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

MixtureModel fig_model() {
  MixtureModel m;
  m.components = {{Family::Gaussian, -10.0, 1.0, 1.0},
                  {Family::Gaussian, 0.0, 5.0, 1.0},
                  {Family::Gaussian, 15.0, 7.0, 1.0}};
  m.weights = {0.25, 0.10, 0.65};
  return m;
}

struct Row {
  const char* name;
  double serial_ms;
  double parallel_ms;
  bool identical;
};

template <typename Fn>
Row bench(const char* name, int repeat, Fn&& fn) {
  Row row{name, 0.0, 0.0, true};
  std::vector<double> ref;
  for (int r = 0; r < repeat; ++r) {
    const double t0 = now_ms();
    std::vector<double> out = fn(Execution::Serial);
    row.serial_ms += now_ms() - t0;
    ref = std::move(out);
  }
  for (int r = 0; r < repeat; ++r) {
    const double t0 = now_ms();
    std::vector<double> out = fn(Execution::Parallel);
    row.parallel_ms += now_ms() - t0;
    row.identical = row.identical && out.size() == ref.size() &&
                    std::memcmp(out.data(), ref.data(), out.size() * sizeof(double)) == 0;
  }
  row.serial_ms /= repeat;
  row.parallel_ms /= repeat;
  return row;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeat = argc > 1 ? std::atoi(argv[1]) : 3;
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("threads=%d repeat=%d\n", threads, repeat);

  const MixtureModel m = fig_model();
  IntegrationSpec spec;
  spec.method = IntegrationMethod::Riemann;

  std::vector<Row> rows;

  rows.push_back(bench("fisher_matrix all k=3 (550 pts)", repeat, [&](Execution exec) {
    const UnknownConfig config{UnknownKind::All};
    const FisherMatrix f = fisher_matrix(m, config, spec, exec);
    return std::vector<double>(f.entries.data(), f.entries.data() + f.entries.size());
  }));

  rows.push_back(bench("prior_grid weights k=3 (40x40)", repeat, [&](Execution exec) {
    GridSpec grid;
    grid.axes = {{"p1", 0.02, 0.96, 40}, {"p2", 0.02, 0.96, 40}};
    const UnknownConfig config{UnknownKind::WeightsOnly};
    return prior_grid(m, config, grid, spec, PriorKind::Jeffreys, exec).values;
  }));

  rows.push_back(bench("properness_probe 2-d (120 pts/dim)", repeat, [&](Execution exec) {
    auto log_density = [](const std::vector<double>& x) {
      return -0.5 * (x[0] * x[0] + x[1] * x[1]) - 1.8378770664093453;
    };
    std::vector<ProbeBox> boxes;
    for (double a : {2.0, 4.0, 8.0}) boxes.push_back({{{-a, a}, {-a, a}}});
    return properness_probe(log_density, boxes, 120, 0.01, exec).masses;
  }));

  std::printf("%-36s %12s %12s %9s %s\n", "kernel", "serial ms", "parallel ms",
              "speedup", "identical");
  bool all_identical = true;
  for (const Row& r : rows) {
    std::printf("%-36s %12.2f %12.2f %8.2fx %s\n", r.name, r.serial_ms, r.parallel_ms,
                r.serial_ms / r.parallel_ms, r.identical ? "yes" : "NO");
    all_identical = all_identical && r.identical;
  }
  return all_identical ? 0 : 1;
}
