#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tabletop/goal.hpp"
#include "tabletop/rng.hpp"
#include "tabletop/scene.hpp"

namespace tabletop {

struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Rgb at(int col, int row) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(row) * width + col);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  friend bool operator==(const ColorImage&, const ColorImage&) = default;
};

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> meters;  // row-major, height above the table

  float at(int col, int row) const { return meters[static_cast<std::size_t>(row) * width + col]; }
  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

/// Privileged channel for oracle-style policies: the full scene plus the structured goal.
struct SymbolicSnapshot {
  SceneState scene;
  GoalCondition goal;
  friend bool operator==(const SymbolicSnapshot&, const SymbolicSnapshot&) = default;
};

struct Observation {
  ColorImage color;
  DepthImage depth;
  std::optional<SymbolicSnapshot> symbolic;

  bool has_rasters() const { return !color.rgb.empty(); }
};

namespace detail {

/// Surface height of an object at a point inside its footprint, or a negative value when
/// the point is not covered (outside a bowl's disc).
inline double surface_height(const ObjectInstance& o, double z, double x, double y) {
  if (o.kind != ObjectKind::bowl) return z + o.support_height();
  const double r = std::hypot(x - o.pose.x, y - o.pose.y);
  const double outer = 0.5 * kBowlDiameter;
  if (r > outer) return -1.0;
  const double rim_width = 0.012;
  return r >= outer - rim_width ? z + kBowlRimHeight : z + kBowlFloorHeight;
}

inline Rgb shade(Rgb c, double factor) {
  auto f = [factor](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::clamp(static_cast<int>(v * factor + 0.5), 0, 255));
  };
  return {f(c.r), f(c.g), f(c.b)};
}

}  // namespace detail

/// Top-down orthographic color and height rasters. Each pixel shows the highest surface
/// covering its center, which is the painter's order by height.
inline Observation render(const SceneState& s, const WorkspaceConfig& cfg, Rng& rng, bool noisy) {
  Observation obs;
  const int w = cfg.raster_width;
  const int h = cfg.raster_height;
  obs.color.width = obs.depth.width = w;
  obs.color.height = obs.depth.height = h;
  obs.color.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  obs.depth.meters.assign(static_cast<std::size_t>(w) * h, 0.0f);
  for (std::size_t i = 0; i < obs.color.rgb.size(); i += 3) {
    obs.color.rgb[i] = kTableColor.r;
    obs.color.rgb[i + 1] = kTableColor.g;
    obs.color.rgb[i + 2] = kTableColor.b;
  }
  std::vector<double> zbuf(static_cast<std::size_t>(w) * h, -1.0);

  const double ppm = cfg.pixels_per_meter;
  for (const auto& o : s.objects) {
    const Rect fp = o.footprint();
    const int c0 = std::max(0, static_cast<int>(std::floor((fp.x0 - cfg.bounds.x0) * ppm)));
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil((fp.x1 - cfg.bounds.x0) * ppm)));
    const int r0 = std::max(0, static_cast<int>(std::floor((fp.y0 - cfg.bounds.y0) * ppm)));
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil((fp.y1 - cfg.bounds.y0) * ppm)));
    const Rgb base = palette(o.color);
    const double z = s.elevation(o.id);
    for (int row = r0; row <= r1; ++row) {
      const double y = cfg.bounds.y0 + (row + 0.5) / ppm;
      if (y < fp.y0 || y > fp.y1) continue;
      for (int col = c0; col <= c1; ++col) {
        const double x = cfg.bounds.x0 + (col + 0.5) / ppm;
        if (x < fp.x0 || x > fp.x1) continue;
        const double zs = detail::surface_height(o, z, x, y);
        if (zs < 0.0) continue;
        const std::size_t p = static_cast<std::size_t>(row) * w + col;
        if (zs < zbuf[p]) continue;
        zbuf[p] = zs;
        Rgb c = base;
        if (o.kind == ObjectKind::bowl && zs - z < kBowlRimHeight) c = detail::shade(base, 0.75);
        if (o.kind == ObjectKind::zone) c = detail::shade(base, 0.85);
        obs.color.rgb[3 * p] = c.r;
        obs.color.rgb[3 * p + 1] = c.g;
        obs.color.rgb[3 * p + 2] = c.b;
        obs.depth.meters[p] = static_cast<float>(zs);
      }
    }
  }

  if (noisy) {
    std::normal_distribution<double> gauss(0.0, cfg.obs_noise_sigma);
    if (cfg.depth_noise && cfg.obs_noise_sigma > 0.0) {
      for (float& d : obs.depth.meters) d = static_cast<float>(std::max(0.0, d + gauss(rng)));
    }
    if (cfg.color_noise) {
      for (auto& v : obs.color.rgb) v = static_cast<std::uint8_t>(std::clamp(v + uniform_int(rng, -2, 2), 0, 255));
    }
  }
  return obs;
}

}  // namespace tabletop
