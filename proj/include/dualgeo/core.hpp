// Shared numeric primitives: dense vector helpers, angle wrapping, a
// deterministic RNG wrapper, and the error taxonomy used across the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualgeo {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, usually d x d

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// Margin kept between any stored point and the unit-ball boundary.
inline constexpr double kBallMargin = 1e-5;
// Distance below which trailing coordinates count as an axis singularity.
inline constexpr double kAxisTol = 1e-12;
// Gradient-path clamp for arccos arguments.
inline constexpr double kAcosClamp = 1e-12;
// Gradient-path floor for arccosh arguments (>= 1 + this).
inline constexpr double kAcoshFloor = 1e-15;
// Loss ceiling for the divergence guard.
inline constexpr double kLossCeiling = 1e6;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePoint : Error { using Error::Error; };
struct InvalidAngle : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct OutsideBall : Error { using Error::Error; };
struct NumericalDegeneracy : Error { using Error::Error; };
struct UnknownRelation : Error { using Error::Error; };
struct SamplingExhausted : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct SchemaViolation : Error { using Error::Error; };
struct UnsupportedVersion : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };
struct EmptyEvaluation : Error { using Error::Error; };
struct InvalidQuery : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Vector helpers

inline void check_same_dim(const Vec& a, const Vec& b, const char* where) {
  if (a.size() != b.size())
    throw DimensionMismatch(std::string(where) + ": dimensions " +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sqnorm(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(sqnorm(a)); }

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec scaled(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

// y += s * x
inline void axpy(double s, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

// Wraps an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod rounding can land exactly on 2*pi
  return r;
}

inline Vec wrap_angles(Vec a) {
  for (double& v : a) v = wrap_angle(v);
  return a;
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// mt19937_64 with explicit double extraction so that sequences are identical
// across standard library implementations; state round-trips through text.

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    // Rejection-free modulo bias is negligible for n << 2^64; keep it exact
    // anyway with rejection sampling.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  bool coin() { return (gen_() & 1u) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[uniform_index(i)]);
  }

  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    if (is.fail()) throw ParseError("rng state: malformed");
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dualgeo
