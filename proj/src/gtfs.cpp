#include "tripmine/gtfs.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include "tripmine/csv.hpp"
#include "tripmine/error.hpp"
#include "tripmine/numeric.hpp"

namespace tripmine {

RouteType route_type_from_gtfs(int code) {
  switch (code) {
    case 0: return RouteType::Tram;
    case 1: return RouteType::Subway;
    case 2: return RouteType::Rail;
    case 3: return RouteType::Bus;
    default: break;
  }
  if (code >= 900 && code < 1000) return RouteType::Tram;
  if (code >= 700 && code < 800) return RouteType::Bus;
  if (code >= 400 && code < 500) return RouteType::Subway;
  if (code >= 100 && code < 200) return RouteType::Rail;
  return RouteType::Other;
}

bool ServiceCalendar::active(const std::string& service_id, Date date) const {
  if (auto it = exceptions_.find({service_id, date}); it != exceptions_.end()) return it->second;
  if (rules_.empty()) return true;
  auto it = rules_.find(service_id);
  if (it == rules_.end()) return false;
  const CalendarRule& rule = it->second;
  return date >= rule.start && date <= rule.end && rule.weekdays[weekday_index(date)];
}

void ServiceCalendar::add_rule(std::string service_id, CalendarRule rule) {
  rules_.insert_or_assign(std::move(service_id), rule);
}

void ServiceCalendar::add_exception(std::string service_id, Date date, bool added) {
  exceptions_.insert_or_assign({std::move(service_id), date}, added);
}

std::optional<int> parse_gtfs_time(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  auto c1 = s.find(':');
  if (c1 == std::string_view::npos) return std::nullopt;
  auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string_view::npos || c2 - c1 != 3 || s.size() - c2 != 3) return std::nullopt;
  auto h = parse_int(s.substr(0, c1));
  auto m = parse_int(s.substr(c1 + 1, 2));
  auto sec = parse_int(s.substr(c2 + 1, 2));
  if (!h || !m || !sec || *h < 0 || *h > 999 || *m < 0 || *m > 59 || *sec < 0 || *sec > 59) {
    return std::nullopt;
  }
  return static_cast<int>(*h * 3600 + *m * 60 + *sec);
}

std::string format_gtfs_time(int seconds) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", seconds / 3600, (seconds / 60) % 60,
                seconds % 60);
  return buf;
}

GtfsFeed::GtfsFeed(std::vector<Stop> stops, std::vector<Route> routes,
                   std::vector<TripSchedule> trips, ServiceCalendar calendar,
                   std::map<std::string, Polyline> shapes)
    : stops_(std::move(stops)),
      routes_(std::move(routes)),
      trips_(std::move(trips)),
      calendar_(std::move(calendar)),
      shapes_(std::move(shapes)) {
  for (std::size_t i = 0; i < stops_.size(); ++i) {
    if (!stop_by_id_.emplace(stops_[i].stop_id, i).second) {
      throw Error(ErrorCode::ParseError, "duplicate stop_id", stops_[i].stop_id);
    }
    stop_index_.insert(stops_[i].stop_id, stops_[i].location);
  }
  for (std::size_t i = 0; i < routes_.size(); ++i) {
    if (!route_by_id_.emplace(routes_[i].route_id, i).second) {
      throw Error(ErrorCode::ParseError, "duplicate route_id", routes_[i].route_id);
    }
  }
  for (std::size_t t = 0; t < trips_.size(); ++t) {
    TripSchedule& trip = trips_[t];
    if (!trip_by_id_.emplace(trip.trip_id, t).second) {
      throw Error(ErrorCode::ParseError, "duplicate trip_id", trip.trip_id);
    }
    if (!route_by_id_.contains(trip.route_id)) {
      throw Error(ErrorCode::DanglingReference, "trip references unknown route",
                  "route:" + trip.route_id);
    }
    if (!trip.shape_id.empty() && !shapes_.empty() && !shapes_.contains(trip.shape_id)) {
      throw Error(ErrorCode::DanglingReference, "trip references unknown shape",
                  "shape:" + trip.shape_id);
    }
    std::stable_sort(trip.stop_times.begin(), trip.stop_times.end(),
                     [](const StopTime& a, const StopTime& b) {
                       return a.stop_sequence < b.stop_sequence;
                     });
    for (std::size_t i = 0; i < trip.stop_times.size(); ++i) {
      const StopTime& st = trip.stop_times[i];
      if (!stop_by_id_.contains(st.stop_id)) {
        throw Error(ErrorCode::DanglingReference, "stop_time references unknown stop",
                    "stop:" + st.stop_id);
      }
      if (st.departure < st.arrival) {
        throw Error(ErrorCode::ParseError, "departure before arrival", trip.trip_id);
      }
      if (i > 0) {
        const StopTime& prev = trip.stop_times[i - 1];
        if (prev.stop_sequence == st.stop_sequence) {
          throw Error(ErrorCode::ParseError, "duplicate stop_sequence", trip.trip_id);
        }
        if (st.arrival < prev.departure) {
          throw Error(ErrorCode::ParseError, "stop times decrease along trip", trip.trip_id);
        }
      }
      visits_by_stop_[st.stop_id].push_back({t, i, st.departure});
    }
  }
  for (auto& [id, visits] : visits_by_stop_) {
    std::sort(visits.begin(), visits.end(), [this](const Visit& a, const Visit& b) {
      if (a.departure != b.departure) return a.departure < b.departure;
      return trips_[a.trip].trip_id < trips_[b.trip].trip_id;
    });
  }
}

std::size_t GtfsFeed::stop_time_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : trips_) n += t.stop_times.size();
  return n;
}

const Stop* GtfsFeed::find_stop(std::string_view id) const {
  auto it = stop_by_id_.find(std::string(id));
  return it == stop_by_id_.end() ? nullptr : &stops_[it->second];
}

const Route* GtfsFeed::find_route(std::string_view id) const {
  auto it = route_by_id_.find(std::string(id));
  return it == route_by_id_.end() ? nullptr : &routes_[it->second];
}

const TripSchedule* GtfsFeed::find_trip(std::string_view id) const {
  auto it = trip_by_id_.find(std::string(id));
  return it == trip_by_id_.end() ? nullptr : &trips_[it->second];
}

std::vector<Departure> GtfsFeed::departures_at_stop(const std::string& stop_id, Date date,
                                                    TimeWindow window) const {
  if (!stop_by_id_.contains(stop_id)) {
    throw Error(ErrorCode::UnknownStop, "unknown stop", stop_id);
  }
  std::vector<Departure> out;
  auto it = visits_by_stop_.find(stop_id);
  if (it == visits_by_stop_.end() || window.t0 >= window.t1) return out;
  const auto& visits = it->second;
  auto first = std::lower_bound(visits.begin(), visits.end(), window.t0,
                                [](const Visit& v, int t) { return v.departure < t; });
  for (auto v = first; v != visits.end() && v->departure < window.t1; ++v) {
    const TripSchedule& trip = trips_[v->trip];
    if (!service_active(trip.service_id, date)) continue;
    out.push_back({trip.trip_id, v->departure});
  }
  return out;
}

std::vector<PairService> GtfsFeed::trips_serving_pair(const std::string& stop_a,
                                                      const std::string& stop_b, Date date,
                                                      TimeWindow window) const {
  for (const auto* id : {&stop_a, &stop_b}) {
    if (!stop_by_id_.contains(*id)) throw Error(ErrorCode::UnknownStop, "unknown stop", *id);
  }
  std::vector<PairService> out;
  auto it = visits_by_stop_.find(stop_a);
  if (it == visits_by_stop_.end() || window.t0 >= window.t1) return out;
  const auto& visits = it->second;
  auto first = std::lower_bound(visits.begin(), visits.end(), window.t0,
                                [](const Visit& v, int t) { return v.departure < t; });
  for (auto v = first; v != visits.end() && v->departure < window.t1; ++v) {
    const TripSchedule& trip = trips_[v->trip];
    if (!service_active(trip.service_id, date)) continue;
    for (std::size_t j = v->stop_time + 1; j < trip.stop_times.size(); ++j) {
      if (trip.stop_times[j].stop_id == stop_b) {
        out.push_back({trip.trip_id, trip.route_id, v->departure, trip.stop_times[j].arrival,
                       v->stop_time, j});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PairService& a, const PairService& b) {
    return std::tie(a.dep_a, a.trip_id, a.arr_b, a.index_a, a.index_b) <
           std::tie(b.dep_a, b.trip_id, b.arr_b, b.index_a, b.index_b);
  });
  return out;
}

std::vector<GeoPoint> GtfsFeed::trip_path(const TripSchedule& trip, std::size_t from_index,
                                          std::size_t to_index) const {
  if (!trip.shape_id.empty()) {
    if (auto it = shapes_.find(trip.shape_id); it != shapes_.end()) {
      auto pts = it->second.points();
      return {pts.begin(), pts.end()};
    }
  }
  std::vector<GeoPoint> path;
  to_index = std::min(to_index, trip.stop_times.size() - 1);
  for (std::size_t i = from_index; i <= to_index; ++i) {
    const GeoPoint& p = find_stop(trip.stop_times[i].stop_id)->location;
    if (path.empty() || !(path.back() == p)) path.push_back(p);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

class TableReader {
 public:
  TableReader(const std::filesystem::path& path, std::string name)
      : file_(path), name_(std::move(name)), reader_(file_) {
    if (!file_) throw Error(ErrorCode::MissingFile, "cannot open GTFS file", name_);
    auto header = reader_.next();
    if (!header) throw Error(ErrorCode::ParseError, "empty file", name_ + ":1");
    header_.emplace(*header);
  }

  std::size_t require_column(std::string_view column) const {
    auto idx = header_->find(column);
    if (!idx) {
      throw Error(ErrorCode::ParseError, "missing column " + std::string(column), name_ + ":1");
    }
    return *idx;
  }
  std::optional<std::size_t> column(std::string_view c) const { return header_->find(c); }

  bool next() {
    auto row = reader_.next();
    if (!row) return false;
    row_ = std::move(*row);
    return true;
  }

  const std::string& field(std::size_t idx) const {
    static const std::string empty;
    return idx < row_.size() ? row_[idx] : empty;
  }
  std::string field(std::optional<std::size_t> idx) const {
    return idx ? field(*idx) : std::string{};
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, what, location());
  }
  std::string location() const { return name_ + ":" + std::to_string(reader_.line()); }

  double require_double(std::size_t idx, std::string_view what) const {
    auto v = parse_double(field(idx));
    if (!v) fail("invalid " + std::string(what));
    return *v;
  }
  long long require_int(std::size_t idx, std::string_view what) const {
    auto v = parse_int(field(idx));
    if (!v) fail("invalid " + std::string(what));
    return *v;
  }

 private:
  std::ifstream file_;
  std::string name_;
  CsvReader reader_;
  std::optional<CsvHeader> header_;
  std::vector<std::string> row_;
};

std::filesystem::path required(const std::filesystem::path& dir, const char* name) {
  auto p = dir / name;
  if (!std::filesystem::is_regular_file(p)) {
    throw Error(ErrorCode::MissingFile, "required GTFS file missing", name);
  }
  return p;
}

}  // namespace

GtfsFeed GtfsFeed::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::MissingFile, "GTFS directory not found", dir.string());
  }

  std::vector<Stop> stops;
  {
    TableReader t(required(dir, "stops.txt"), "stops.txt");
    auto c_id = t.require_column("stop_id");
    auto c_lat = t.require_column("stop_lat");
    auto c_lon = t.require_column("stop_lon");
    auto c_name = t.column("stop_name");
    while (t.next()) {
      if (t.field(c_id).empty()) t.fail("empty stop_id");
      double lat = t.require_double(c_lat, "stop_lat");
      double lon = t.require_double(c_lon, "stop_lon");
      if (!GeoPoint::valid(lat, lon)) t.fail("stop coordinate out of range");
      stops.push_back({t.field(c_id), t.field(c_name), GeoPoint(lat, lon)});
    }
  }

  std::vector<Route> routes;
  {
    TableReader t(required(dir, "routes.txt"), "routes.txt");
    auto c_id = t.require_column("route_id");
    auto c_type = t.require_column("route_type");
    auto c_short = t.column("route_short_name");
    auto c_long = t.column("route_long_name");
    while (t.next()) {
      if (t.field(c_id).empty()) t.fail("empty route_id");
      int code = static_cast<int>(t.require_int(c_type, "route_type"));
      std::string name = t.field(c_short);
      if (name.empty()) name = t.field(c_long);
      routes.push_back({t.field(c_id), name, route_type_from_gtfs(code), code});
    }
  }

  std::map<std::string, Polyline> shapes;
  if (auto p = dir / "shapes.txt"; std::filesystem::is_regular_file(p)) {
    TableReader t(p, "shapes.txt");
    auto c_id = t.require_column("shape_id");
    auto c_lat = t.require_column("shape_pt_lat");
    auto c_lon = t.require_column("shape_pt_lon");
    auto c_seq = t.require_column("shape_pt_sequence");
    std::map<std::string, std::vector<std::pair<long long, GeoPoint>>> raw;
    while (t.next()) {
      double lat = t.require_double(c_lat, "shape_pt_lat");
      double lon = t.require_double(c_lon, "shape_pt_lon");
      if (!GeoPoint::valid(lat, lon)) t.fail("shape coordinate out of range");
      raw[t.field(c_id)].emplace_back(t.require_int(c_seq, "shape_pt_sequence"),
                                      GeoPoint(lat, lon));
    }
    for (auto& [id, pts] : raw) {
      std::stable_sort(pts.begin(), pts.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      std::vector<GeoPoint> line;
      for (auto& [seq, pt] : pts) line.push_back(pt);
      try {
        shapes.emplace(id, Polyline(std::move(line)));
      } catch (const Error&) {
        throw Error(ErrorCode::ParseError, "degenerate shape", "shapes.txt:" + id);
      }
    }
  }

  std::vector<TripSchedule> trips;
  std::unordered_map<std::string, std::size_t> trip_index;
  {
    TableReader t(required(dir, "trips.txt"), "trips.txt");
    auto c_id = t.require_column("trip_id");
    auto c_route = t.require_column("route_id");
    auto c_service = t.require_column("service_id");
    auto c_shape = t.column("shape_id");
    while (t.next()) {
      if (t.field(c_id).empty()) t.fail("empty trip_id");
      if (!trip_index.emplace(t.field(c_id), trips.size()).second) t.fail("duplicate trip_id");
      trips.push_back({t.field(c_id), t.field(c_route), t.field(c_service), t.field(c_shape), {}});
    }
  }

  {
    TableReader t(required(dir, "stop_times.txt"), "stop_times.txt");
    auto c_trip = t.require_column("trip_id");
    auto c_arr = t.require_column("arrival_time");
    auto c_dep = t.require_column("departure_time");
    auto c_stop = t.require_column("stop_id");
    auto c_seq = t.require_column("stop_sequence");
    while (t.next()) {
      auto it = trip_index.find(t.field(c_trip));
      if (it == trip_index.end()) {
        throw Error(ErrorCode::DanglingReference, "stop_time references unknown trip",
                    "trip:" + t.field(c_trip));
      }
      std::optional<int> arr = parse_gtfs_time(t.field(c_arr));
      std::optional<int> dep = parse_gtfs_time(t.field(c_dep));
      if (!arr && !t.field(c_arr).empty()) t.fail("invalid arrival_time");
      if (!dep && !t.field(c_dep).empty()) t.fail("invalid departure_time");
      if (!arr && !dep) t.fail("untimed stop_time is not supported");
      if (!arr) arr = dep;
      if (!dep) dep = arr;
      long long seq = t.require_int(c_seq, "stop_sequence");
      if (seq < 0) t.fail("negative stop_sequence");
      trips[it->second].stop_times.push_back(
          {t.field(c_stop), *arr, *dep, static_cast<int>(seq)});
    }
  }

  ServiceCalendar calendar;
  if (auto p = dir / "calendar.txt"; std::filesystem::is_regular_file(p)) {
    TableReader t(p, "calendar.txt");
    auto c_id = t.require_column("service_id");
    static constexpr std::array<const char*, 7> kDays{"sunday",   "monday", "tuesday",
                                                      "wednesday", "thursday", "friday",
                                                      "saturday"};
    std::array<std::size_t, 7> c_days{};
    for (std::size_t d = 0; d < 7; ++d) c_days[d] = t.require_column(kDays[d]);
    auto c_start = t.require_column("start_date");
    auto c_end = t.require_column("end_date");
    while (t.next()) {
      CalendarRule rule;
      for (std::size_t d = 0; d < 7; ++d) {
        auto v = t.field(c_days[d]);
        if (v != "0" && v != "1") t.fail(std::string("invalid ") + kDays[d]);
        rule.weekdays[d] = v == "1";
      }
      auto start = try_parse_date(t.field(c_start));
      auto end = try_parse_date(t.field(c_end));
      if (!start || !end) t.fail("invalid service date");
      rule.start = *start;
      rule.end = *end;
      calendar.add_rule(t.field(c_id), rule);
    }
  }
  if (auto p = dir / "calendar_dates.txt"; std::filesystem::is_regular_file(p)) {
    TableReader t(p, "calendar_dates.txt");
    auto c_id = t.require_column("service_id");
    auto c_date = t.require_column("date");
    auto c_type = t.require_column("exception_type");
    while (t.next()) {
      auto date = try_parse_date(t.field(c_date));
      if (!date) t.fail("invalid date");
      auto type = t.field(c_type);
      if (type != "1" && type != "2") t.fail("invalid exception_type");
      calendar.add_exception(t.field(c_id), *date, type == "1");
    }
  }

  return GtfsFeed(std::move(stops), std::move(routes), std::move(trips), std::move(calendar),
                  std::move(shapes));
}

void GtfsFeed::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write GTFS file", (dir / name).string());
    return out;
  };
  {
    auto out = open("stops.txt");
    out << "stop_id,stop_name,stop_lat,stop_lon\n";
    for (const auto& s : stops_) {
      out << csv_escape(s.stop_id) << ',' << csv_escape(s.name) << ','
          << format_double(s.location.lat()) << ',' << format_double(s.location.lon()) << '\n';
    }
  }
  {
    auto out = open("routes.txt");
    out << "route_id,route_short_name,route_type\n";
    for (const auto& r : routes_) {
      out << csv_escape(r.route_id) << ',' << csv_escape(r.short_name) << ','
          << r.gtfs_route_type << '\n';
    }
  }
  {
    auto out = open("trips.txt");
    out << "route_id,service_id,trip_id,shape_id\n";
    for (const auto& t : trips_) {
      out << csv_escape(t.route_id) << ',' << csv_escape(t.service_id) << ','
          << csv_escape(t.trip_id) << ',' << csv_escape(t.shape_id) << '\n';
    }
  }
  {
    auto out = open("stop_times.txt");
    out << "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n";
    for (const auto& t : trips_) {
      for (const auto& st : t.stop_times) {
        out << csv_escape(t.trip_id) << ',' << format_gtfs_time(st.arrival) << ','
            << format_gtfs_time(st.departure) << ',' << csv_escape(st.stop_id) << ','
            << st.stop_sequence << '\n';
      }
    }
  }
  if (calendar_.has_rules()) {
    auto out = open("calendar.txt");
    out << "service_id,sunday,monday,tuesday,wednesday,thursday,friday,saturday,start_date,"
           "end_date\n";
    for (const auto& [id, rule] : calendar_.rules()) {
      out << csv_escape(id);
      for (bool on : rule.weekdays) out << ',' << (on ? '1' : '0');
      out << ',' << format_gtfs_date(rule.start) << ',' << format_gtfs_date(rule.end) << '\n';
    }
  }
  if (!calendar_.exceptions().empty()) {
    auto out = open("calendar_dates.txt");
    out << "service_id,date,exception_type\n";
    for (const auto& [key, added] : calendar_.exceptions()) {
      out << csv_escape(key.first) << ',' << format_gtfs_date(key.second) << ','
          << (added ? 1 : 2) << '\n';
    }
  }
  if (!shapes_.empty()) {
    auto out = open("shapes.txt");
    out << "shape_id,shape_pt_lat,shape_pt_lon,shape_pt_sequence\n";
    for (const auto& [id, line] : shapes_) {
      int seq = 1;
      for (const auto& p : line.points()) {
        out << csv_escape(id) << ',' << format_double(p.lat()) << ',' << format_double(p.lon())
            << ',' << seq++ << '\n';
      }
    }
  }
}

}  // namespace tripmine
