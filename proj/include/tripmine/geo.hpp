#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tripmine {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// WGS84-ish coordinate in degrees. Construction rejects non-finite or
/// out-of-range values with ErrorCode::InvalidArgument.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  static bool valid(double lat, double lon) noexcept;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Point displaced by the given metric offsets (local equirectangular).
GeoPoint offset_by_meters(const GeoPoint& origin, double north_m, double east_m);

/// Ordered vertex list with at least two points and no consecutive duplicates.
/// Consecutive duplicates in the input are collapsed before the size check.
class Polyline {
 public:
  explicit Polyline(std::vector<GeoPoint> points);

  std::span<const GeoPoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double length_m() const;

  friend bool operator==(const Polyline&, const Polyline&) = default;

 private:
  std::vector<GeoPoint> points_;
};

/// Minimum distance from p to any segment of the line, computed in a local
/// equirectangular projection centred on p.
double point_to_polyline_distance(const GeoPoint& p, const Polyline& line);
/// Same, for a raw vertex run; a single vertex degenerates to point distance.
double point_to_path_distance(const GeoPoint& p, std::span<const GeoPoint> path);

struct Neighbor {
  std::string id;
  double distance_m;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Uniform lat/lon grid over string-keyed points. Build with insert(), then
/// treat as immutable; const queries are safe from several threads.
class SpatialIndex {
 public:
  static constexpr double kDefaultCellSizeDeg = 0.005;

  explicit SpatialIndex(double cell_size_deg = kDefaultCellSizeDeg);

  void insert(std::string id, const GeoPoint& location);

  /// Every indexed point with distance <= radius_m, ascending by distance,
  /// ties by id. Non-positive radius yields an empty result.
  std::vector<Neighbor> nearest_within(const GeoPoint& p, double radius_m) const;

  std::size_t size() const noexcept { return entries_.size(); }
  double cell_size_deg() const noexcept { return cell_size_; }

  struct Entry {
    std::string id;
    GeoPoint location;
  };
  std::span<const Entry> entries() const noexcept { return entries_; }

 private:
  struct CellKey {
    std::int64_t row;
    std::int64_t col;
    friend bool operator==(const CellKey&, const CellKey&) = default;
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const noexcept {
      return std::hash<std::int64_t>{}(k.row * 1'000'003 + k.col);
    }
  };

  CellKey cell_of(const GeoPoint& p) const;
  void collect(const GeoPoint& p, double radius_m, const std::vector<std::size_t>& bucket,
               std::vector<Neighbor>& out) const;

  double cell_size_;
  std::vector<Entry> entries_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> cells_;
};

}  // namespace tripmine
