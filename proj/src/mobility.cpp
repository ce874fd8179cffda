#include "fogsim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fogsim {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// FNV-1a; stable across platforms unlike std::hash.
std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double reflect(double v, double hi, double& dir) {
  if (v < 0) {
    dir = -dir;
    return std::min(-v, hi);
  }
  if (v > hi) {
    dir = -dir;
    return std::max(2 * hi - v, 0.0);
  }
  return v;
}

}  // namespace

std::mt19937_64 derive_stream(std::uint64_t master_seed, const std::string& stream,
                              std::uint64_t index) {
  std::uint64_t state = master_seed ^ name_hash(stream);
  splitmix64(state);
  state ^= index * 0xD1B54A32D192ED03ull;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // Built from raw bits so the sequence does not depend on the standard
  // library's distribution implementation.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

void new_leg(WalkState& s, const Area& area, const WalkParams& p, std::mt19937_64& rng) {
  const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const Vec2 dir{std::cos(theta), std::sin(theta)};
  double d_max = std::numeric_limits<double>::infinity();
  if (dir.x > 1e-12) d_max = std::min(d_max, (area.width - s.position.x) / dir.x);
  if (dir.x < -1e-12) d_max = std::min(d_max, -s.position.x / dir.x);
  if (dir.y > 1e-12) d_max = std::min(d_max, (area.height - s.position.y) / dir.y);
  if (dir.y < -1e-12) d_max = std::min(d_max, -s.position.y / dir.y);
  if (!std::isfinite(d_max) || d_max < 0) d_max = 0;
  const double d = uniform(rng, 0.0, d_max);
  s.heading = dir;
  s.destination = {s.position.x + dir.x * d, s.position.y + dir.y * d};
  s.speed = uniform(rng, p.speed_min, p.speed_max);
}

WalkState start_walk(Vec2 start, const Area& area, const WalkParams& p, std::mt19937_64& rng) {
  WalkState s;
  s.position = start;
  new_leg(s, area, p, rng);
  return s;
}

void random_walk_step(WalkState& s, const Area& area, const WalkParams& p, double dt,
                      std::mt19937_64& rng) {
  const double step = s.speed * dt;
  const double remaining = distance(s.position, s.destination);
  if (step >= remaining) {
    s.position = s.destination;
    new_leg(s, area, p, rng);
    return;
  }
  s.position.x += s.heading.x * step;
  s.position.y += s.heading.y * step;
  if (!area.contains(s.position)) {
    s.position.x = reflect(s.position.x, area.width, s.heading.x);
    s.position.y = reflect(s.position.y, area.height, s.heading.y);
    s.destination = {s.position.x + s.heading.x * (remaining - step),
                     s.position.y + s.heading.y * (remaining - step)};
    if (!area.contains(s.destination)) new_leg(s, area, p, rng);
  }
}

}  // namespace fogsim
