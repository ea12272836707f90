#pragma once

#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tripmine/geo.hpp"
#include "tripmine/time.hpp"

namespace tripmine {

/// Average probe-vehicle speed for one road segment and 15-minute interval.
struct FcdRecord {
  std::string segment_id;
  Instant interval_start{};
  double avg_speed_kmh = 0.0;

  friend bool operator==(const FcdRecord&, const FcdRecord&) = default;
};

/// A journey-planner request: origin and destination are stop ids or points.
using QueryEndpoint = std::variant<std::string, GeoPoint>;

struct PtQuery {
  QueryEndpoint origin;
  QueryEndpoint destination;
  Instant departure{};
  Instant issued_at{};

  friend bool operator==(const PtQuery&, const PtQuery&) = default;
};

enum class NotificationCategory { Warning, Accident, Other };
std::string_view to_string(NotificationCategory c);

struct TrafficNotification {
  std::string id;
  std::string title;
  std::string description;
  Instant published_at{};
  std::optional<GeoPoint> location;
  NotificationCategory category = NotificationCategory::Other;

  friend bool operator==(const TrafficNotification&, const TrafficNotification&) = default;
};

struct StreetSegment {
  std::string segment_id;
  Polyline geometry;
  std::optional<std::string> name;
  std::optional<std::string> road_class;

  friend bool operator==(const StreetSegment&, const StreetSegment&) = default;
};

enum class RowErrorKind {
  ColumnCount,
  EmptyField,
  BadInstant,
  Misaligned,
  BadNumber,
  NegativeSpeed,
  BadEndpoint,
  SameEndpoints,
};
std::string_view to_string(RowErrorKind kind);

struct RowError {
  std::size_t line = 0;
  RowErrorKind kind = RowErrorKind::ColumnCount;
  std::string detail;
};

template <typename T>
struct ParseReport {
  std::vector<T> records;
  std::vector<RowError> errors;
};

/// Header "segment_id,interval_start,avg_speed_kmh". Bad rows are reported
/// with their line number; a missing or wrong header throws ParseError.
ParseReport<FcdRecord> parse_fcd_csv(std::istream& in);
std::string serialize_fcd_csv(std::span<const FcdRecord> records);

/// Header "origin,destination,departure,issued_at"; endpoints are stop ids or
/// "lat;lon".
ParseReport<PtQuery> parse_query_log_csv(std::istream& in);
std::string serialize_query_log_csv(std::span<const PtQuery> queries);
std::string format_endpoint(const QueryEndpoint& e);

struct FeedParseResult {
  std::vector<TrafficNotification> notifications;
  std::vector<std::string> warnings;  // skipped items
};

/// Keyword classification of a notification title.
NotificationCategory categorize_title(std::string_view title);

/// RSS 2.0 reader. Items without a parseable pubDate are skipped with a
/// warning. Throws MalformedXml for documents that are not well-formed RSS.
FeedParseResult parse_traffic_feed(std::istream& in);
std::string serialize_traffic_feed(std::span<const TrafficNotification> items);

/// GeoJSON FeatureCollection of LineStrings, positions in (lon, lat) order.
/// Throws MalformedGeoJson, MissingSegmentId or NonLineStringGeometry.
std::vector<StreetSegment> load_street_segments(std::istream& in);
std::string serialize_street_segments(std::span<const StreetSegment> segments);

struct AlignedRecord {
  FcdRecord record;
  const StreetSegment* segment = nullptr;
};

struct AlignmentResult {
  std::vector<AlignedRecord> joined;
  std::set<std::string> unmatched_ids;
};

/// Joins FCD records to street segments on segment_id. Pointers in the
/// result refer into `segments`.
AlignmentResult align_fcd_to_segments(std::span<const FcdRecord> records,
                                      std::span<const StreetSegment> segments);

}  // namespace tripmine
