#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conelab/scheme.hpp"

namespace conelab {

// Brute-force oracle for the best-approximation map at desk scale
// (n * dy <= 4, at most 1e7 cloud points). The cloud is a dense grid over a
// two-parameter scheme plus materialized random refinement points; grid
// points are procedural (index -> parameters -> value), so memory stays flat.

struct GridSpec {
  double lo = -20.0;
  double hi = 20.0;
  double step = 2e-2;
  std::size_t axis_points() const;
};

struct CloudSpec {
  std::optional<GridSpec> grid;   // only for 2-parameter schemes
  std::size_t num_random = 0;     // random refinement points
  double random_radius = 20.0;    // parameters sampled uniformly in a box
  std::uint64_t seed = 1;
};

inline constexpr std::size_t kMaxCloudPoints = 10'000'000;
inline constexpr int kMaxBruteForceDim = 4;  // cap on n * dy

class ImageCloud {
 public:
  ImageCloud(Scheme scheme, Dataset data, const CloudSpec& spec);

  const Scheme& scheme() const { return scheme_; }
  const Dataset& dataset() const { return data_; }
  std::size_t size() const { return total_; }
  bool has_grid() const { return grid_.has_value(); }
  const std::optional<GridSpec>& grid() const { return grid_; }

  ParamVector params(std::size_t i) const;
  YVector value(std::size_t i) const;
  double dist_to(std::size_t i, const YVector& target) const;

  // Conservative bound on the Y-distance between neighbouring grid points;
  // reported with every projection result.
  double resolution() const { return resolution_; }

 private:
  Scheme scheme_;
  Dataset data_;
  std::optional<GridSpec> grid_;
  std::size_t grid_points_ = 0;  // axis^2
  std::size_t axis_ = 0;
  std::vector<double> random_params_;  // num_random * m
  std::size_t total_ = 0;
  double resolution_ = 0.0;
};

struct ProjectionCluster {
  YVector point;
  ParamVector alpha;
  double dist;
  std::size_t index;
};

struct ProjectionResult {
  double min_dist = 0.0;
  std::vector<ProjectionCluster> clusters;
  bool multivalued = false;
  double cluster_tol;
  double sep_tol;
  double resolution;
};

// Scans the whole cloud; clusters are maximal groups of near-optimal points
// whose representatives are mutually >= sep_tol apart. Defaults:
// cluster_tol = 1e-3 (relative), sep_tol = 10 * resolution.
ProjectionResult project(const ImageCloud& cloud, const YVector& y_d, double cluster_tol = 1e-3,
                         std::optional<double> sep_tol = std::nullopt);

// Serial reference implementation of the scan (same contract, one thread);
// kept for kernel tests and the benchmark.
ProjectionResult project_serial(const ImageCloud& cloud, const YVector& y_d,
                                double cluster_tol = 1e-3,
                                std::optional<double> sep_tol = std::nullopt);

struct ProbeStep {
  double t;  // 1/l
  YVector label;
  YVector representative;
  double min_dist;
  bool single_valued;
};

struct DiscontinuityProbe {
  std::vector<ProbeStep> toward_z1;
  std::vector<ProbeStep> toward_z2;
  double final_separation;      // distance between the two final representatives
  double cluster_separation;    // ||z1 - z2||
  bool labels_converge;         // both label sequences approach y_d
  bool all_single_valued;
};

// Follows y^l = (1 - 1/l) y_d + (1/l) z_i for l = 1..steps toward the two
// cluster representatives of a multivalued label.
DiscontinuityProbe discontinuity_probe(const ImageCloud& cloud, const YVector& y_d,
                                       const ProjectionCluster& z1, const ProjectionCluster& z2,
                                       int steps, double cluster_tol = 1e-3,
                                       std::optional<double> sep_tol = std::nullopt);

struct SolarStep {
  double s;
  double dist_target_to_ybar;
  double min_dist;
  bool excluded;  // ybar demonstrably not a best approximation of the target
};

struct SolarReport {
  double threshold;
  std::vector<SolarStep> steps;
  bool all_excluded_beyond_threshold = true;
};

// For each s > threshold = sqrt(theta/(1-theta)) ||ybar||, checks that ybar
// is excluded from the best approximations of ybar + s (y_d-ybar)/||y_d-ybar||.
SolarReport solar_check(const ImageCloud& cloud, const YVector& y_d, const YVector& ybar,
                        double theta, const std::vector<double>& s_values,
                        double cluster_tol = 1e-3, std::optional<double> sep_tol = std::nullopt);

// Searches the perpendicular bisector segment between pairs of well-separated
// cloud points for a label with >= 2 clusters.
struct MultivaluedSearch {
  bool found = false;
  YVector y_d;
  ProjectionResult projection;
};

MultivaluedSearch find_multivalued_label(const ImageCloud& cloud, int num_pairs, int scan_steps,
                                         std::uint64_t seed, double cluster_tol = 1e-3,
                                         std::optional<double> sep_tol = std::nullopt);

// Flood-fill count of connected components of {loss <= level} on the
// parameter grid (2-parameter schemes only).
int sublevel_component_count(const ImageCloud& cloud, const YVector& y_d, double level);

struct CsvExport {
  std::size_t rows = 0;
  std::string path;
};

// Writes "y1,...,yk,a1,...,am" rows; grid points are decimated by `stride`.
CsvExport export_cloud_csv(const ImageCloud& cloud, const std::string& path, std::size_t stride);

}  // namespace conelab
