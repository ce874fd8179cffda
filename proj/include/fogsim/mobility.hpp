#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "fogsim/topology.hpp"

namespace fogsim {

// splitmix64-derived generator for one named stream of a run.
std::mt19937_64 derive_stream(std::uint64_t master_seed, const std::string& stream,
                              std::uint64_t index = 0);

double uniform(std::mt19937_64& rng, double lo, double hi);

struct Area {
  double width = 2000.0;
  double height = 1000.0;
  bool contains(Vec2 p) const { return p.x >= 0 && p.x <= width && p.y >= 0 && p.y <= height; }
};

struct WalkParams {
  double speed_min = 0.5;
  double speed_max = 4.0;
};

struct WalkState {
  Vec2 position;
  Vec2 destination;
  Vec2 heading;  // unit vector
  double speed = 0.0;

  Vec2 velocity() const { return {heading.x * speed, heading.y * speed}; }
};

// Draws a new leg: uniform direction, uniform distance up to the area edge
// along it, uniform speed.
void new_leg(WalkState& s, const Area& area, const WalkParams& p, std::mt19937_64& rng);

WalkState start_walk(Vec2 start, const Area& area, const WalkParams& p, std::mt19937_64& rng);

// Advances by speed * dt toward the destination; on arrival draws a new leg.
// Positions that leave the area are reflected back inside.
void random_walk_step(WalkState& s, const Area& area, const WalkParams& p, double dt,
                      std::mt19937_64& rng);

}  // namespace fogsim
