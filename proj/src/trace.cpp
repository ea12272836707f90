#include "tripmine/trace.hpp"

#include <algorithm>
#include <cmath>

#include "tripmine/error.hpp"

namespace tripmine {

Pseudonym::Pseudonym(std::string hex) : value_(std::move(hex)) {
  if (!is_valid(value_)) throw Error(ErrorCode::InvalidArgument, "malformed pseudonym");
}

bool Pseudonym::is_valid(std::string_view text) noexcept {
  if (text.size() != kHexLength) return false;
  return std::all_of(text.begin(), text.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

std::string_view to_string(ActivityKind kind) {
  switch (kind) {
    case ActivityKind::Still: return "Still";
    case ActivityKind::OnFoot: return "OnFoot";
    case ActivityKind::OnBicycle: return "OnBicycle";
    case ActivityKind::InVehicle: return "InVehicle";
    case ActivityKind::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<ActivityKind> activity_kind_from_string(std::string_view text) {
  for (auto k : {ActivityKind::Still, ActivityKind::OnFoot, ActivityKind::OnBicycle,
                 ActivityKind::InVehicle, ActivityKind::Unknown}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

double path_length_m(std::span<const TracePoint> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    total += haversine_distance(points[i - 1].location, points[i].location);
  }
  return total;
}

AssembledTrip assemble_trip(const Pseudonym& owner, std::string trip_id,
                            std::vector<TracePoint> raw, const TraceConfig& config) {
  const std::size_t raw_count = raw.size();
  std::erase_if(raw, [&](const TracePoint& p) {
    return !std::isfinite(p.accuracy_m) || p.accuracy_m < 0.0 ||
           p.accuracy_m > config.accuracy_cutoff_m;
  });
  std::stable_sort(raw.begin(), raw.end(), [](const TracePoint& a, const TracePoint& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.accuracy_m < b.accuracy_m;
  });
  // After the sort the best fix leads each run of equal timestamps.
  raw.erase(std::unique(raw.begin(), raw.end(),
                        [](const TracePoint& a, const TracePoint& b) {
                          return a.timestamp == b.timestamp;
                        }),
            raw.end());
  if (raw.size() < 2) {
    throw Error(ErrorCode::TooFewPoints, "fewer than two usable points",
                std::to_string(raw.size()) + " of " + std::to_string(raw_count));
  }

  AssembledTrip out;
  out.dropped = raw_count - raw.size();
  out.trip.trip_id = std::move(trip_id);
  out.trip.owner = owner;
  out.trip.started_at = raw.front().timestamp;
  out.trip.ended_at = raw.back().timestamp;
  out.trip.points = std::move(raw);
  return out;
}

namespace {

struct Slice {
  std::size_t begin;
  std::size_t end;  // exclusive
  ActivityKind kind;
};

double slice_duration(const std::vector<TracePoint>& pts, const Slice& s) {
  return seconds_between(pts[s.begin].timestamp, pts[s.end - 1].timestamp);
}

void coalesce(std::vector<Slice>& slices) {
  std::vector<Slice> out;
  for (const Slice& s : slices) {
    if (!out.empty() && out.back().kind == s.kind) {
      out.back().end = s.end;
    } else {
      out.push_back(s);
    }
  }
  slices = std::move(out);
}

}  // namespace

std::vector<Segment> segment_by_activity(const Trip& trip, const TraceConfig& config) {
  const auto& pts = trip.points;
  const std::size_t n = pts.size();
  if (n == 0) return {};

  // Effective kinds: Unknown inherits its surroundings.
  std::vector<ActivityKind> kind(n, ActivityKind::Unknown);
  ActivityKind last = ActivityKind::Unknown;
  for (std::size_t i = 0; i < n; ++i) {
    if (pts[i].activity.kind != ActivityKind::Unknown) last = pts[i].activity.kind;
    kind[i] = last;
  }
  auto first_known = std::find_if(kind.begin(), kind.end(),
                                   [](ActivityKind k) { return k != ActivityKind::Unknown; });
  if (first_known != kind.end()) std::fill(kind.begin(), first_known, *first_known);

  std::vector<Slice> runs;
  for (std::size_t i = 0; i < n; ++i) {
    if (runs.empty() || runs.back().kind != kind[i]) {
      runs.push_back({i, i + 1, kind[i]});
    } else {
      runs.back().end = i + 1;
    }
  }
  auto persistence = [&](std::size_t r) {
    const auto start = pts[runs[r].begin].timestamp;
    const auto stop = r + 1 < runs.size() ? pts[runs[r + 1].begin].timestamp
                                          : pts[runs[r].end - 1].timestamp;
    return seconds_between(start, stop);
  };

  // Hysteresis: the opening kind is the first one that persists long enough.
  std::size_t opening = 0;
  while (opening < runs.size() && persistence(opening) < config.hysteresis_s) ++opening;
  if (opening == runs.size()) opening = 0;

  std::vector<Slice> slices{{0, n, runs[opening].kind}};
  for (std::size_t r = opening + 1; r < runs.size(); ++r) {
    if (runs[r].kind == slices.back().kind || persistence(r) < config.hysteresis_s) continue;
    slices.back().end = runs[r].begin;
    slices.push_back({runs[r].begin, n, runs[r].kind});
  }

  // Fold short slices into the longer neighbour until none remain.
  while (slices.size() >= 2) {
    std::size_t victim = slices.size();
    double shortest = config.merge_floor_s;
    for (std::size_t i = 0; i < slices.size(); ++i) {
      const double d = slice_duration(pts, slices[i]);
      if (d < shortest) {
        shortest = d;
        victim = i;
      }
    }
    if (victim == slices.size()) break;
    std::size_t target;
    if (victim == 0) {
      target = 1;
    } else if (victim + 1 == slices.size()) {
      target = victim - 1;
    } else {
      const double before = slice_duration(pts, slices[victim - 1]);
      const double after = slice_duration(pts, slices[victim + 1]);
      target = after > before ? victim + 1 : victim - 1;
    }
    slices[victim].kind = slices[target].kind;
    coalesce(slices);
  }

  std::vector<Segment> out;
  out.reserve(slices.size());
  for (const Slice& s : slices) {
    Segment seg;
    seg.trip_id = trip.trip_id;
    seg.first_index = s.begin;
    seg.points.assign(pts.begin() + static_cast<std::ptrdiff_t>(s.begin),
                      pts.begin() + static_cast<std::ptrdiff_t>(s.end));
    seg.dominant_activity = s.kind;
    seg.duration_s = slice_duration(pts, s);
    seg.length_m = path_length_m(seg.points);
    out.push_back(std::move(seg));
  }
  return out;
}

GeometryStats trip_geometry_stats(std::span<const TracePoint> points, const TraceConfig& config) {
  GeometryStats stats;
  if (points.size() < 2) return stats;
  stats.duration_s = seconds_between(points.front().timestamp, points.back().timestamp);
  stats.length_m = path_length_m(points);

  std::vector<double> speeds;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dt = seconds_between(points[i - 1].timestamp, points[i].timestamp);
    if (dt <= 0.0 || dt > config.gap_cutoff_s) continue;
    speeds.push_back(haversine_distance(points[i - 1].location, points[i].location) / dt);
  }
  if (speeds.empty()) return stats;
  std::sort(speeds.begin(), speeds.end());
  const std::size_t mid = speeds.size() / 2;
  stats.median_speed_mps =
      speeds.size() % 2 == 1 ? speeds[mid] : 0.5 * (speeds[mid - 1] + speeds[mid]);
  return stats;
}

}  // namespace tripmine
