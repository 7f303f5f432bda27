#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saddle/linalg.hpp"
#include "saddle/objective.hpp"
#include "saddle/optimizers.hpp"
#include "saddle/spectral.hpp"

namespace saddle {

enum class FlowKind { gd, sam };

// dw/dt = -grad(w) for GD; dw/dt = -grad(w + rho grad(w)) for SAM.
struct FlowSpec {
  FlowKind kind = FlowKind::gd;
  double rho = 0.0;
};

struct FlowOptions {
  double h = 1e-3;
  std::size_t record_stride = 1;  // 0 keeps only the endpoints
  double divergence_norm = 1e8;
};

struct FlowPath {
  std::vector<double> times;
  std::vector<Point> points;
  FlowSpec spec;
  bool diverged = false;

  const Point& end() const { return points.back(); }
};

Vector flow_field(const Objective& obj, std::span<const double> w, const FlowSpec& spec);

// One classical fourth-order Runge-Kutta step of size h, in place.
void rk4_step(const Objective& obj, const FlowSpec& spec, std::span<double> w, double h);

// Fixed-step RK4 from w0 to t_end (last step shortened to land on t_end).
// Integration stops early, with `diverged` set, once the state leaves the
// divergence ball or turns non-finite.
FlowPath integrate_flow(const Objective& obj, std::span<const double> w0, const FlowSpec& spec,
                        double t_end, const FlowOptions& opts = {});

std::string flow_csv(const FlowPath& path);

struct KnownMinimum {
  std::string name;
  std::function<double(std::span<const double>)> distance;

  static KnownMinimum at_point(std::string name, Point p);
};

struct BasinLabel {
  enum class Kind { minimum, diverged, saddle_trapped, unclassified };
  Kind kind = Kind::unclassified;
  int id = -1;  // index into the minima (or saddles) list
  Point endpoint;
  double time = 0.0;

  bool same_basin(const BasinLabel& o) const { return kind == o.kind && id == o.id; }
};

std::string to_string(const BasinLabel& label);

struct BasinOptions {
  double h = 1e-3;
  double t_max = 50.0;
  double capture_radius = 1e-3;
  double divergence_norm = 1e8;
  std::vector<Point> saddles;  // for the saddle-trapped label
};

// Follows the GD flow from w until it comes within capture_radius of a known
// minimum. At t_max the point is labeled saddle-trapped if it sits within
// capture_radius of a listed saddle, otherwise unclassified. An empty minima
// list is allowed (every bounded endpoint is then unclassified).
BasinLabel classify_basin(const Objective& obj, std::span<const double> w,
                          std::span<const KnownMinimum> minima, const BasinOptions& opts = {});

// GD flow from saddle +/- eps * (eigenvector of the most negative eigenvalue).
// Throws ContractViolation for an index-0 point.
std::pair<FlowPath, FlowPath> unstable_manifold_probe(const Objective& obj, const CriticalPoint& saddle,
                                                      double eps, double t_end = 50.0,
                                                      const FlowOptions& opts = {});

enum class CaseKind { case_i, case_ii, case_iii_i, case_iii_ii, unclassified };
std::string to_string(CaseKind k);

struct CaseEvidence {
  double crossing_fraction = 0.0;   // basin(w_p) != basin(w)
  double return_fraction = 0.0;     // of crossings, basin(w_next) == basin(w)
  double cosine_alternation = 0.0;  // sign flips between consecutive defined cosines
  double mean_saddle_distance = 0.0;
  bool approaching = false;  // saddle distance shrinks over the window
};

struct WindowCase {
  std::size_t first_t = 0;
  std::size_t last_t = 0;
  CaseKind label = CaseKind::unclassified;
  CaseEvidence evidence;
};

struct CaseOptions {
  std::size_t window = 100;
  double alternation_threshold = 0.4;
  double reach_factor = 10.0;  // Case-II when within reach_factor * rho of the saddle
  double crossing_majority = 0.5;
};

using BasinClassifier = std::function<BasinLabel(std::span<const double>)>;

// Labels consecutive windows of recorded steps:
//   Case-III-ii  w_p mostly in another basin and grad_cosine alternates sign
//                at least alternation_threshold of the time,
//   Case-III-i   w_p mostly in another basin without that alternation,
//   Case-II      same basins, within reach_factor * rho of the saddle and
//                getting closer,
//   Case-I       otherwise.
// Windows shorter than opts.window are unclassified.
std::vector<WindowCase> classify_case(const Trajectory& traj, std::span<const double> saddle, double rho,
                                      const BasinClassifier& basin, const CaseOptions& opts = {});

// Fraction of consecutive defined grad_cosine pairs that flip sign over the
// last `tail` records.
double cosine_alternation_rate(const Trajectory& traj, std::size_t tail);

}  // namespace saddle
