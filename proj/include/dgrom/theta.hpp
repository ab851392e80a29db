#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dgrom/common.hpp"
#include "dgrom/geometry.hpp"

namespace dgrom {

/// Closed-form parameter coefficient of one affine term, written in the entries of the
/// subdomain Jacobians G_i.
enum class ThetaKind : std::uint8_t {
  one = 0,      // 1
  penalty = 1,  // 1, or alpha(mu) when alpha scaling is on
  cross = 2,    // |det G_r| (G_s^-1 G_r^-T)_ab
  inverse = 3,  // |det G_s| (G_s^-1)_ab
  volume = 4,   // |det G_s|
  stretch = 5,  // |G_s t| / |t| for the reference edge vector t
};

struct ThetaRecipe {
  ThetaKind kind = ThetaKind::one;
  std::uint32_t s = 0, r = 0;
  std::uint8_t a = 0, b = 0;
  double tx = 0.0, ty = 0.0;  // stretch only

  static ThetaRecipe one() { return {}; }
  static ThetaRecipe penalty() { return {ThetaKind::penalty}; }
  static ThetaRecipe cross(Index s, Index r, int a, int b) {
    return {ThetaKind::cross, std::uint32_t(s), std::uint32_t(r), std::uint8_t(a), std::uint8_t(b)};
  }
  static ThetaRecipe inverse(Index s, int a, int b) {
    return {ThetaKind::inverse, std::uint32_t(s), 0, std::uint8_t(a), std::uint8_t(b)};
  }
  static ThetaRecipe volume(Index s) { return {ThetaKind::volume, std::uint32_t(s)}; }
  /// `edge` identifies the subdomain edge along t.
  static ThetaRecipe stretch(Index s, int edge, const Vec2& t) {
    return {ThetaKind::stretch, std::uint32_t(s), 0, std::uint8_t(edge), 0, t.x(), t.y()};
  }

  auto key() const { return std::make_tuple(kind, s, r, a, b); }
  bool operator==(const ThetaRecipe& o) const { return key() == o.key() && tx == o.tx && ty == o.ty; }

  double evaluate(const std::vector<AffineMap>& maps, double alpha, bool alpha_scaling) const {
    switch (kind) {
      case ThetaKind::one: return 1.0;
      case ThetaKind::penalty: return alpha_scaling ? alpha : 1.0;
      case ThetaKind::cross: {
        const AffineMap& gs = maps.at(s);
        const AffineMap& gr = maps.at(r);
        return std::abs(gr.det) * (gs.Ginv * gr.GinvT)(a, b);
      }
      case ThetaKind::inverse: {
        const AffineMap& g = maps.at(s);
        return std::abs(g.det) * g.Ginv(a, b);
      }
      case ThetaKind::volume: return std::abs(maps.at(s).det);
      case ThetaKind::stretch: {
        const Vec2 t(tx, ty);
        return (maps.at(s).G * t).norm() / t.norm();
      }
    }
    throw Error("unknown theta recipe");
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case ThetaKind::one: os << "1"; break;
      case ThetaKind::penalty: os << "penalty"; break;
      case ThetaKind::cross: os << "cross(" << s << "," << r << "," << int(a) << "," << int(b) << ")"; break;
      case ThetaKind::inverse: os << "inverse(" << s << "," << int(a) << "," << int(b) << ")"; break;
      case ThetaKind::volume: os << "volume(" << s << ")"; break;
      case ThetaKind::stretch: os << "stretch(" << s << ",edge " << int(a) << ")"; break;
    }
    return os.str();
  }
};

struct ThetaVector {
  Vec2 mu;
  std::vector<double> values;
};

inline ThetaVector evaluate_theta(const std::vector<ThetaRecipe>& recipes, const MapSet& ms, bool alpha_scaling) {
  for (Index i = 0; i < ms.maps.size(); ++i)
    if (!(ms.maps[i].det > 0.0))
      throw Error("subdomain " + std::to_string(i) + " map has det G <= 0");
  ThetaVector t;
  t.mu = ms.mu;
  t.values.reserve(recipes.size());
  for (const auto& r : recipes) t.values.push_back(r.evaluate(ms.maps, ms.alpha, alpha_scaling));
  return t;
}

}  // namespace dgrom
