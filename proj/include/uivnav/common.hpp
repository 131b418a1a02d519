#ifndef UIVNAV__COMMON_HPP_
#define UIVNAV__COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uivnav
{

inline constexpr const char * kToolVersion = "0.3.0";

// Error hierarchy. Everything the library throws derives from Error so callers
// (CLI, server, bindings) can map failures to exit codes / status codes.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error
{
public:
  using Error::Error;
};

class ParseError : public Error
{
public:
  using Error::Error;
};

class OutOfBoundsError : public Error
{
public:
  using Error::Error;
};

class DimensionError : public Error
{
public:
  using Error::Error;
};

class PlanningError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

constexpr double deg2rad(double deg) {return deg * std::numbers::pi / 180.0;}
constexpr double rad2deg(double rad) {return rad * 180.0 / std::numbers::pi;}

/// Wraps an angle in degrees into (-180, 180].
inline double normalize_deg(double deg)
{
  double a = std::fmod(deg, 360.0);
  if (a <= -180.0) {
    a += 360.0;
  } else if (a > 180.0) {
    a -= 360.0;
  }
  return a;
}

/// SplitMix64-seeded xoshiro256** generator. Distribution helpers are written
/// out by hand so sampled streams are identical across standard libraries.
class Rng
{
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) {return lo + (hi - lo) * uniform();}
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (the spare value is cached).
  double normal();

private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void * data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string & s);
std::string hex64(std::uint64_t v);

}  // namespace uivnav

#endif  // UIVNAV__COMMON_HPP_
