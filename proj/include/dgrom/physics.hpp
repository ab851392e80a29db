#pragma once

#include <functional>
#include <string>

#include "dgrom/common.hpp"
#include "dgrom/geometry.hpp"

namespace dgrom {

/// Dirichlet velocity as a function of the physical point and the boundary tag it lies on.
using DirichletData = std::function<Vec2(const Vec2&, BoundaryTag)>;

/// Parabolic inflow u = (y(1-y), 0) on the inflow boundary, no slip everywhere else.
inline Vec2 channel_dirichlet(const Vec2& x, BoundaryTag tag) {
  if (tag == BoundaryTag::inflow) return Vec2(x.y() * (1.0 - x.y()), 0.0);
  return Vec2::Zero();
}

enum class PenaltyMode { constant, scaled };

inline const char* to_string(PenaltyMode m) { return m == PenaltyMode::constant ? "constant" : "scaled"; }

/// C11 as given (constant) or value * D^2 / h_min (scaled).
inline double resolve_penalty(PenaltyMode mode, double value, int degree, double h_min) {
  if (!(value > 0.0)) throw Error("penalty value must be positive");
  if (mode == PenaltyMode::constant) return value;
  return value * degree * degree / h_min;
}

struct PhysicsConfig {
  double nu = 1.0;
  double c11 = 0.0;
  DirichletData dirichlet = channel_dirichlet;
  Vec2 traction = Vec2::Zero();  // constant Neumann value
  Vec2 source = Vec2::Zero();    // constant body force
  bool nu_scaled_volume = true;  // multiply the volume viscous term by nu

  void validate() const {
    if (!(nu > 0.0)) throw Error("viscosity must be positive");
    if (!(c11 > 0.0)) throw Error("penalty constant C11 must be positive");
    if (!dirichlet) throw Error("missing Dirichlet data");
  }

  double volume_factor() const { return nu_scaled_volume ? nu : 1.0; }
};

}  // namespace dgrom
