#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tripmine/gtfs.hpp"
#include "tripmine/mode_inference.hpp"
#include "tripmine/sources.hpp"
#include "tripmine/store.hpp"

namespace tripmine {

// ---------------------------------------------------------------------------
// Mode share

/// One classified unimodal leg, the unit mode share is counted in.
struct ClassifiedLeg {
  Mode mode = Mode::Unknown;
  double duration_s = 0.0;
};

struct ModeShareRow {
  Mode mode = Mode::Unknown;
  std::size_t trip_count = 0;
  double total_duration_s = 0.0;
  double count_share = 0.0;
  double duration_share = 0.0;
};

struct ModeShare {
  std::vector<ModeShareRow> rows;  // one per Mode, in kAllModes order
  std::size_t total_trips = 0;
  double total_duration_s = 0.0;

  const ModeShareRow& row(Mode mode) const;
};

/// Count- and duration-based shares. With no legs every share is 0.
ModeShare mode_share(std::span<const ClassifiedLeg> legs);

/// Classified segments of one user, oldest trip first.
std::vector<ClassifiedLeg> legs_of_user(const StoreData& data, const Pseudonym& user);

// ---------------------------------------------------------------------------
// Dataset statistics

struct DatasetStats {
  std::size_t user_count = 0;
  std::size_t trip_count = 0;
  double average_trip_duration_min = 0.0;
  std::size_t gps_point_count = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const StoreData& data);

// ---------------------------------------------------------------------------
// Stop query time series

struct QueryTimeseries {
  std::string stop_id;
  Date date{};
  int bucket_width_s = 1800;
  std::vector<std::size_t> counts;  // 86'400 / bucket_width_s buckets from 00:00 UTC
};

/// Counts queries whose origin or destination is stop_id, bucketed by
/// departure time on date with half-open buckets. bucket_width_s must divide
/// 86'400 (InvalidArgument otherwise).
QueryTimeseries stop_query_timeseries(std::span<const PtQuery> queries,
                                      const std::string& stop_id, Date date,
                                      int bucket_width_s = 1800);

// ---------------------------------------------------------------------------
// Congestion

enum class LoadLevel { Heavy, Medium, Low };
std::string_view to_string(LoadLevel level);

struct CongestionThresholds {
  double heavy_below = 0.5;
  double medium_below = 0.75;
};

struct CongestionLevel {
  std::string segment_id;
  Instant interval_start{};
  LoadLevel level = LoadLevel::Low;
  double speed_ratio = 0.0;
};

/// ratio = observed / reference clamped to [0, 1]. Throws BadReference when
/// reference_speed_kmh <= 0.
CongestionLevel congestion_level(const FcdRecord& record, double reference_speed_kmh,
                                 const CongestionThresholds& thresholds = {});

/// Free-flow speed: nearest-rank 95th percentile of the segment's records.
std::optional<double> reference_speed(std::span<const FcdRecord> history,
                                      const std::string& segment_id);

/// Congestion for every segment with a record in the 15-minute interval
/// containing `at`, ordered by segment_id.
std::vector<CongestionLevel> congestion_snapshot(std::span<const FcdRecord> fcd, Instant at,
                                                 const CongestionThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Event impact

struct EventImpactRequest {
  GeoPoint venue;
  Instant event_time{};
  double radius_m = 1000.0;
  double history_horizon_s = 8.0 * 7 * 86'400;  // lookback for baseline dates
  int bucket_width_s = 1800;
  CongestionThresholds thresholds;
};

struct EventImpactReport {
  Instant congestion_at{};  // event_time - 30 min
  std::vector<CongestionLevel> congestion;
  std::string stop_id;  // stop nearest the venue
  QueryTimeseries event_series;
  std::vector<Date> baseline_dates;
  std::vector<double> baseline;  // per-bucket median over baseline_dates
  std::vector<double> delta;     // event - baseline
};

/// Throws InsufficientHistory with fewer than four prior same-weekday dates
/// carrying query data inside the horizon.
EventImpactReport event_impact_report(const EventImpactRequest& request,
                                      std::span<const FcdRecord> fcd,
                                      std::span<const StreetSegment> streets,
                                      std::span<const PtQuery> queries, const GtfsFeed& feed);

}  // namespace tripmine
