#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tripmine/geo.hpp"
#include "tripmine/pseudonym.hpp"
#include "tripmine/time.hpp"

namespace tripmine {

/// Normalised vocabulary over the platform activity-recognition APIs.
enum class ActivityKind { Still, OnFoot, OnBicycle, InVehicle, Unknown };

std::string_view to_string(ActivityKind kind);
std::optional<ActivityKind> activity_kind_from_string(std::string_view text);

struct ActivityLabel {
  ActivityKind kind = ActivityKind::Unknown;
  double confidence = 0.0;  // [0, 1]

  friend bool operator==(const ActivityLabel&, const ActivityLabel&) = default;
};

struct TracePoint {
  Instant timestamp{};
  GeoPoint location;
  double accuracy_m = 0.0;
  ActivityLabel activity;
  std::optional<double> client_speed_mps;  // advisory only

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct Trip {
  std::string trip_id;
  Pseudonym owner;
  std::vector<TracePoint> points;  // strictly increasing timestamps
  Instant started_at{};
  Instant ended_at{};

  friend bool operator==(const Trip&, const Trip&) = default;
};

/// Unimodal contiguous slice of a trip.
struct Segment {
  std::string trip_id;
  std::size_t first_index = 0;  // position of points.front() in the trip
  std::vector<TracePoint> points;
  ActivityKind dominant_activity = ActivityKind::Unknown;
  double duration_s = 0.0;
  double length_m = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct TraceConfig {
  double accuracy_cutoff_m = 100.0;
  double hysteresis_s = 60.0;
  double merge_floor_s = 30.0;
  double gap_cutoff_s = 300.0;
};

struct AssembledTrip {
  Trip trip;
  std::size_t dropped = 0;
};

/// Sorts by timestamp, drops points with accuracy above the cutoff (or
/// non-finite / negative accuracy), and collapses equal timestamps keeping
/// the most accurate fix. Throws TooFewPoints when fewer than two remain.
AssembledTrip assemble_trip(const Pseudonym& owner, std::string trip_id,
                            std::vector<TracePoint> raw_points, const TraceConfig& config = {});

/// Splits a trip into maximal activity runs. A kind change is committed only
/// if the new kind lasts at least hysteresis_s; resulting segments shorter
/// than merge_floor_s are folded into their longer neighbour. Unknown labels
/// take the kind of the preceding (or, at the start, following) point.
std::vector<Segment> segment_by_activity(const Trip& trip, const TraceConfig& config = {});

struct GeometryStats {
  double duration_s = 0.0;
  double length_m = 0.0;
  double median_speed_mps = 0.0;
};

GeometryStats trip_geometry_stats(std::span<const TracePoint> points,
                                  const TraceConfig& config = {});
inline GeometryStats trip_geometry_stats(const Trip& trip, const TraceConfig& config = {}) {
  return trip_geometry_stats(trip.points, config);
}

double path_length_m(std::span<const TracePoint> points);

}  // namespace tripmine
