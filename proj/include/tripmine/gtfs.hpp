#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tripmine/geo.hpp"
#include "tripmine/time.hpp"

namespace tripmine {

enum class RouteType { Tram, Subway, Rail, Bus, Other };

/// Maps basic (0..7) and extended (100..1700) GTFS route types.
RouteType route_type_from_gtfs(int code);

struct Stop {
  std::string stop_id;
  std::string name;
  GeoPoint location;
};

struct Route {
  std::string route_id;
  std::string short_name;
  RouteType route_type = RouteType::Other;
  int gtfs_route_type = 0;
};

/// Times are seconds since service-day midnight and may exceed 86'400.
struct StopTime {
  std::string stop_id;
  int arrival = 0;
  int departure = 0;
  int stop_sequence = 0;
};

struct TripSchedule {
  std::string trip_id;
  std::string route_id;
  std::string service_id;
  std::string shape_id;  // empty when the feed has no shape for the trip
  std::vector<StopTime> stop_times;
};

struct CalendarRule {
  std::array<bool, 7> weekdays{};  // indexed Sunday = 0
  Date start{};
  Date end{};
};

class ServiceCalendar {
 public:
  /// With no rules at all (no calendar.txt) every service runs every day,
  /// subject to explicit exceptions.
  bool active(const std::string& service_id, Date date) const;

  void add_rule(std::string service_id, CalendarRule rule);
  /// calendar_dates.txt: added=true is exception_type 1, false is 2.
  void add_exception(std::string service_id, Date date, bool added);

  bool has_rules() const noexcept { return !rules_.empty(); }
  const std::map<std::string, CalendarRule>& rules() const noexcept { return rules_; }
  const std::map<std::pair<std::string, Date>, bool>& exceptions() const noexcept {
    return exceptions_;
  }

 private:
  std::map<std::string, CalendarRule> rules_;
  std::map<std::pair<std::string, Date>, bool> exceptions_;
};

/// Half-open service-time window [t0, t1) in seconds since midnight.
struct TimeWindow {
  int t0 = 0;
  int t1 = 0;
};

struct Departure {
  std::string trip_id;
  int departure = 0;

  friend bool operator==(const Departure&, const Departure&) = default;
};

struct PairService {
  std::string trip_id;
  std::string route_id;
  int dep_a = 0;
  int arr_b = 0;
  std::size_t index_a = 0;  // positions in the trip's stop_times
  std::size_t index_b = 0;

  friend bool operator==(const PairService&, const PairService&) = default;
};

std::optional<int> parse_gtfs_time(std::string_view text);
std::string format_gtfs_time(int seconds);

/// Validated, immutable timetable. All const members are safe for concurrent use.
class GtfsFeed {
 public:
  /// Validates referential integrity and stop-time ordering; sorts each trip's
  /// stop_times by stop_sequence. Throws ParseError / DanglingReference.
  GtfsFeed(std::vector<Stop> stops, std::vector<Route> routes, std::vector<TripSchedule> trips,
           ServiceCalendar calendar, std::map<std::string, Polyline> shapes = {});

  /// Reads stops/routes/trips/stop_times (required) and calendar,
  /// calendar_dates, shapes (optional) from a GTFS directory.
  static GtfsFeed load(const std::filesystem::path& dir);
  /// Writes the feed back out as GTFS CSV files.
  void write(const std::filesystem::path& dir) const;

  std::span<const Stop> stops() const noexcept { return stops_; }
  std::span<const Route> routes() const noexcept { return routes_; }
  std::span<const TripSchedule> trips() const noexcept { return trips_; }
  const ServiceCalendar& calendar() const noexcept { return calendar_; }
  const std::map<std::string, Polyline>& shapes() const noexcept { return shapes_; }
  const SpatialIndex& stop_index() const noexcept { return stop_index_; }
  std::size_t stop_time_count() const noexcept;

  const Stop* find_stop(std::string_view id) const;
  const Route* find_route(std::string_view id) const;
  const TripSchedule* find_trip(std::string_view id) const;

  bool service_active(const std::string& service_id, Date date) const {
    return calendar_.active(service_id, date);
  }

  /// Trips running on date whose departure at stop_id lies in window, sorted by
  /// departure then trip_id. Throws UnknownStop.
  std::vector<Departure> departures_at_stop(const std::string& stop_id, Date date,
                                            TimeWindow window) const;

  /// Trips running on date that visit stop_a before stop_b with dep_a in
  /// window; one entry per (i < j) visit pair. Sorted by dep_a, trip_id, arr_b.
  std::vector<PairService> trips_serving_pair(const std::string& stop_a,
                                              const std::string& stop_b, Date date,
                                              TimeWindow window) const;

  /// Geometry the trip follows between two of its stop_time positions: the
  /// trip's shapes.txt polyline when present, else the stop locations in order.
  std::vector<GeoPoint> trip_path(const TripSchedule& trip, std::size_t from_index,
                                  std::size_t to_index) const;

 private:
  struct Visit {
    std::size_t trip;
    std::size_t stop_time;
    int departure;
  };

  std::vector<Stop> stops_;
  std::vector<Route> routes_;
  std::vector<TripSchedule> trips_;
  ServiceCalendar calendar_;
  std::map<std::string, Polyline> shapes_;
  SpatialIndex stop_index_;
  std::unordered_map<std::string, std::size_t> stop_by_id_;
  std::unordered_map<std::string, std::size_t> route_by_id_;
  std::unordered_map<std::string, std::size_t> trip_by_id_;
  std::unordered_map<std::string, std::vector<Visit>> visits_by_stop_;
};

}  // namespace tripmine
