#pragma once

#include <utility>
#include <vector>

namespace shieldmpc {

// Closed track centerline described by piecewise-constant curvature.
// Arclength wraps modulo the total length.
class TrackGeometry {
 public:
  struct Segment {
    double length;     // m
    double curvature;  // 1/m, positive = left turn
  };

  TrackGeometry() = default;
  TrackGeometry(std::vector<Segment> segments, double half_width,
                double crash_width);

  double curvature(double s) const;
  double wrap(double s) const;
  int segment_index(double s) const;

  double half_width() const { return half_width_; }
  double crash_width() const { return crash_width_; }
  double total_length() const { return total_length_; }
  const std::vector<Segment>& segments() const { return segments_; }

  // Heading swept by the centerline over one lap (rad).
  double total_turning() const;

  // Cartesian pose of the point at (s, e_y), integrating the centerline from
  // the origin heading +x. Used for plots only.
  std::pair<double, double> to_cartesian(double s, double e_y) const;

  // Synthetic closed track with four left turns of radii 8, 5, 6, 7 m.
  static TrackGeometry default_track(double half_width = 1.5,
                                     double crash_width = 1.8);
  // Circle of radius r, used in tests.
  static TrackGeometry circle(double radius, double half_width,
                              double crash_width);
  static TrackGeometry straight(double length, double half_width,
                                double crash_width);

 private:
  std::vector<Segment> segments_;
  std::vector<double> starts_;
  double half_width_ = 1.5;
  double crash_width_ = 1.8;
  double total_length_ = 0.0;
};

}  // namespace shieldmpc
