#include "tripmine/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tripmine/error.hpp"

namespace tripmine {

GeoPoint::GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!valid(lat, lon)) {
    throw Error(ErrorCode::InvalidArgument, "coordinate out of range",
                std::to_string(lat) + "," + std::to_string(lon));
  }
}

bool GeoPoint::valid(double lat, double lon) noexcept {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg_to_rad(a.lat());
  const double phi2 = deg_to_rad(b.lat());
  const double dphi = phi2 - phi1;
  const double dlambda = deg_to_rad(b.lon() - a.lon());
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

GeoPoint offset_by_meters(const GeoPoint& origin, double north_m, double east_m) {
  const double m_per_deg = kEarthRadiusM * kPi / 180.0;
  const double lat = origin.lat() + north_m / m_per_deg;
  const double lon = origin.lon() + east_m / (m_per_deg * std::cos(deg_to_rad(origin.lat())));
  return GeoPoint(lat, lon);
}

Polyline::Polyline(std::vector<GeoPoint> points) {
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "polyline needs at least two distinct vertices");
  }
  points_ = std::move(points);
}

double Polyline::length_m() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    total += haversine_distance(points_[i - 1], points_[i]);
  }
  return total;
}

double point_to_path_distance(const GeoPoint& p, std::span<const GeoPoint> path) {
  if (path.empty()) return std::numeric_limits<double>::infinity();
  if (path.size() == 1) return haversine_distance(p, path.front());

  const double m_per_deg = kEarthRadiusM * kPi / 180.0;
  const double kx = m_per_deg * std::cos(deg_to_rad(p.lat()));
  auto project = [&](const GeoPoint& q) {
    return std::pair{(q.lon() - p.lon()) * kx, (q.lat() - p.lat()) * m_per_deg};
  };

  double best = std::numeric_limits<double>::infinity();
  auto [ax, ay] = project(path[0]);
  for (std::size_t i = 1; i < path.size(); ++i) {
    auto [bx, by] = project(path[i]);
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0);
    const double cx = ax + t * dx;
    const double cy = ay + t * dy;
    best = std::min(best, std::hypot(cx, cy));
    ax = bx;
    ay = by;
  }
  return best;
}

double point_to_polyline_distance(const GeoPoint& p, const Polyline& line) {
  return point_to_path_distance(p, line.points());
}

SpatialIndex::SpatialIndex(double cell_size_deg) : cell_size_(cell_size_deg) {
  if (!(cell_size_deg > 0.0) || !std::isfinite(cell_size_deg)) {
    throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  }
}

SpatialIndex::CellKey SpatialIndex::cell_of(const GeoPoint& p) const {
  return {static_cast<std::int64_t>(std::floor(p.lat() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.lon() / cell_size_))};
}

void SpatialIndex::insert(std::string id, const GeoPoint& location) {
  cells_[cell_of(location)].push_back(entries_.size());
  entries_.push_back({std::move(id), location});
}

void SpatialIndex::collect(const GeoPoint& p, double radius_m,
                           const std::vector<std::size_t>& bucket,
                           std::vector<Neighbor>& out) const {
  for (std::size_t idx : bucket) {
    const double d = haversine_distance(p, entries_[idx].location);
    if (d <= radius_m) out.push_back({entries_[idx].id, d});
  }
}

std::vector<Neighbor> SpatialIndex::nearest_within(const GeoPoint& p, double radius_m) const {
  std::vector<Neighbor> out;
  if (!(radius_m > 0.0)) return out;

  const double m_per_deg = kEarthRadiusM * kPi / 180.0;
  const double radius_deg_lat = radius_m / m_per_deg;
  // Longitude cells shrink towards the poles; size the ring count for the
  // widest latitude the query disc can reach.
  const double max_abs_lat = std::min(90.0, std::abs(p.lat()) + radius_deg_lat);
  const double cos_lat = std::cos(deg_to_rad(max_abs_lat));

  const auto rings_lat = static_cast<std::int64_t>(std::ceil(radius_deg_lat / cell_size_));
  std::int64_t rings_lon = std::numeric_limits<std::int64_t>::max();
  if (cos_lat > 1e-9) {
    const double ring_lon = std::ceil(radius_deg_lat / cos_lat / cell_size_);
    if (ring_lon < 1e12) rings_lon = static_cast<std::int64_t>(ring_lon);
  }
  const std::int64_t rl = std::max<std::int64_t>(1, rings_lat);
  const std::int64_t rc = std::max<std::int64_t>(1, rings_lon);

  const bool scan_all = rc > 1'000'000 || static_cast<double>(2 * rl + 1) * static_cast<double>(2 * rc + 1) >
                                               static_cast<double>(cells_.size());
  if (scan_all) {
    for (const auto& [key, bucket] : cells_) collect(p, radius_m, bucket, out);
  } else {
    const CellKey centre = cell_of(p);
    for (std::int64_t r = centre.row - rl; r <= centre.row + rl; ++r) {
      for (std::int64_t c = centre.col - rc; c <= centre.col + rc; ++c) {
        auto it = cells_.find({r, c});
        if (it != cells_.end()) collect(p, radius_m, it->second, out);
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
    return a.id < b.id;
  });
  return out;
}

}  // namespace tripmine
