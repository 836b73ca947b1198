#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace jeffmix {

inline constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

inline constexpr const char* version_string = "1.0.0";

// Execution policy for the data-parallel kernels (Fisher matrices, grids,
// probe boxes, replications). Serial and Parallel produce bitwise-identical
// results: work items are independent and write to preassigned slots.
enum class Execution { Serial, Parallel };

struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedFamily : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IncompatibleConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InitializationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer. Used to derive independent sub-seeds from
// (master, index...) tuples so parallel work items get decorrelated streams
// and results do not depend on scheduling order.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b), c);
}

double normal_cdf(double z);
double normal_quantile(double p);
double student_t_quantile(double df, double p);

// Seeded RNG with inverse-CDF samplers so draws are reproducible across
// standard-library implementations (std distributions are not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on the open interval (0,1): 53-bit draw, half-ulp offset
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_quantile(uniform()); }
  double student_t(double df) { return student_t_quantile(df, uniform()); }
  double exponential();

 private:
  std::mt19937_64 eng_;
};

double logsumexp(const std::vector<double>& v);

}  // namespace jeffmix
