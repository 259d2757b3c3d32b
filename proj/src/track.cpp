#include "shieldmpc/track.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shieldmpc/types.hpp"

namespace shieldmpc {

TrackGeometry::TrackGeometry(std::vector<Segment> segments, double half_width,
                             double crash_width)
    : segments_(std::move(segments)),
      half_width_(half_width),
      crash_width_(crash_width) {
  if (segments_.empty()) throw ConfigError("track: no segments");
  if (!(half_width_ > 0.0) || !(crash_width_ > half_width_)) {
    throw ConfigError("track: need 0 < half_width < crash_width");
  }
  starts_.reserve(segments_.size());
  for (const auto& seg : segments_) {
    if (!(seg.length > 0.0) || !std::isfinite(seg.curvature)) {
      throw ConfigError("track: segment lengths must be positive and finite");
    }
    starts_.push_back(total_length_);
    total_length_ += seg.length;
  }
}

double TrackGeometry::wrap(double s) const {
  double w = std::fmod(s, total_length_);
  if (w < 0.0) w += total_length_;
  return w;
}

int TrackGeometry::segment_index(double s) const {
  const double w = wrap(s);
  auto it = std::upper_bound(starts_.begin(), starts_.end(), w);
  return static_cast<int>(std::distance(starts_.begin(), it)) - 1;
}

double TrackGeometry::curvature(double s) const {
  return segments_[segment_index(s)].curvature;
}

double TrackGeometry::total_turning() const {
  double sum = 0.0;
  for (const auto& seg : segments_) sum += seg.length * seg.curvature;
  return sum;
}

std::pair<double, double> TrackGeometry::to_cartesian(double s,
                                                      double e_y) const {
  const double w = wrap(s);
  double px = 0.0, py = 0.0, heading = 0.0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const double len = std::min(segments_[i].length, w - starts_[i]);
    if (len <= 0.0) break;
    const double k = segments_[i].curvature;
    if (std::abs(k) < 1e-12) {
      px += len * std::cos(heading);
      py += len * std::sin(heading);
    } else {
      const double h1 = heading + k * len;
      px += (std::sin(h1) - std::sin(heading)) / k;
      py += (std::cos(heading) - std::cos(h1)) / k;
      heading = h1;
    }
  }
  // Lateral offset is to the left of the direction of travel.
  return {px - e_y * std::sin(heading), py + e_y * std::cos(heading)};
}

TrackGeometry TrackGeometry::default_track(double half_width,
                                           double crash_width) {
  // Four quarter turns with radii r1..r4 and straights L1..L4 close the loop
  // when L3 = L1 + (r1 - r2 - r3 + r4) and L4 = L2 + (r1 + r2 - r3 - r4).
  const double r1 = 8.0, r2 = 5.0, r3 = 6.0, r4 = 7.0;
  const double l1 = 6.0, l2 = 4.0;
  const double l3 = l1 + (r1 - r2 - r3 + r4);
  const double l4 = l2 + (r1 + r2 - r3 - r4);
  const double q = std::numbers::pi / 2.0;
  return TrackGeometry({{l1, 0.0},
                        {q * r1, 1.0 / r1},
                        {l2, 0.0},
                        {q * r2, 1.0 / r2},
                        {l3, 0.0},
                        {q * r3, 1.0 / r3},
                        {l4, 0.0},
                        {q * r4, 1.0 / r4}},
                       half_width, crash_width);
}

TrackGeometry TrackGeometry::circle(double radius, double half_width,
                                    double crash_width) {
  return TrackGeometry({{2.0 * std::numbers::pi * radius, 1.0 / radius}},
                       half_width, crash_width);
}

TrackGeometry TrackGeometry::straight(double length, double half_width,
                                      double crash_width) {
  return TrackGeometry({{length, 0.0}}, half_width, crash_width);
}

}  // namespace shieldmpc
