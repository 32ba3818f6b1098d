#pragma once

#include "forge/core/cloud.hpp"
#include "forge/core/parallel.hpp"
#include "forge/treegen/tree.hpp"
#include "forge/vls/bvh.hpp"

#include <cstdint>
#include <vector>

namespace forge::vls {

struct ScannerConfig {
  std::vector<Vec3> positions;
  double angular_resolution_deg = 0.06;
  double azimuth_min_deg = 0.0;
  double azimuth_max_deg = 360.0;
  double elevation_min_deg = -60.0;
  double elevation_max_deg = 90.0;
  double range_noise_sigma = 0.0;  // m, along the ray
  double max_range = 100.0;        // m
  std::uint64_t seed = 0;

  /// Throws InvalidArgument for a non-positive resolution or range, negative
  /// sigma, or an empty angular window.
  void validate() const;
};

/// Rays per axis: ray i sits at min + i * resolution, i < round(span / resolution).
struct RayGrid {
  std::size_t azimuth_steps = 0;
  std::size_t elevation_steps = 0;
  std::size_t per_position() const { return azimuth_steps * elevation_steps; }
};

RayGrid ray_grid(const ScannerConfig& config);

/// Unit direction of grid ray (i, j); azimuth from +X towards +Y.
Vec3 ray_direction(const ScannerConfig& config, std::size_t azimuth_index, std::size_t elevation_index);

struct ScanResult {
  LabeledCloud cloud;                     // semantic = organ id, instance = instance id
  std::vector<std::uint32_t> triangle;    // source triangle per point
  std::vector<std::uint32_t> position;    // scanner index per point
  std::vector<double> range;              // noiseless hit distance per point
};

/// Casts the ray grid from every position; points are ordered by position,
/// then azimuth, then elevation.
ScanResult scan_detailed(const treegen::Mesh& mesh, const ScannerConfig& config, Exec exec = Exec::parallel);
LabeledCloud scan(const treegen::Mesh& mesh, const ScannerConfig& config, Exec exec = Exec::parallel);

/// Positions equally spaced on a horizontal circle of radius
/// (XY half-extent + standoff) around the model's bounding-box center, at the
/// trunk's mid-height, starting on the +X axis.
std::vector<Vec3> default_tls_positions(const treegen::TreeModel& model, std::size_t n_positions,
                                        double standoff = 2.0);

/// Area-weighted uniform surface sample, about `density` points per m^2,
/// labeled from the source faces. No occlusion.
LabeledCloud sample_surface(const treegen::Mesh& mesh, double density, std::uint64_t seed);

}  // namespace forge::vls
