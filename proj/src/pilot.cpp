#include "tripmine/pilot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "tripmine/codec.hpp"
#include "tripmine/csv.hpp"
#include "tripmine/error.hpp"
#include "tripmine/numeric.hpp"

namespace tripmine {

namespace {

constexpr double kCenterLon = 9.73;
constexpr int kStopsPerLine = 10;
constexpr double kStopSpacingM = 500.0;
constexpr int kFirstDeparture = 6 * 3600;
constexpr int kLastDeparture = 22 * 3600;
constexpr int kHeadway = 600;
constexpr int kSampleStep = 5;

struct LineSpec {
  const char* route_id;
  double lat;
  int gtfs_type;  // 0 tram, 3 bus
  int hop_s;      // running time between adjacent stops
};

constexpr LineSpec kLines[] = {
    {"T1", 52.360, 0, 90}, {"B2", 52.380, 3, 100}, {"T3", 52.400, 0, 90}, {"B4", 52.420, 3, 100}};

// Standard distributions are implementation-defined; these are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

std::string stop_id(const LineSpec& line, int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s-%02d", line.route_id, k + 1);
  return buf;
}

GeoPoint stop_location(const LineSpec& line, int k) {
  const double offset = (k - (kStopsPerLine - 1) / 2.0) * kStopSpacingM;
  return offset_by_meters(GeoPoint(line.lat, kCenterLon), 0.0, offset);
}

GeoPoint lerp(const GeoPoint& a, const GeoPoint& b, double f) {
  return GeoPoint(a.lat() + (b.lat() - a.lat()) * f, a.lon() + (b.lon() - a.lon()) * f);
}

Date pilot_day(Rng& rng) {
  // Ten weekdays starting Monday 2026-05-04.
  const std::size_t k = rng.index(10);
  return Date{std::chrono::year{2026} / 5 / 4} + std::chrono::days{k + 2 * (k / 5)};
}

// Between 07:00 and 19:00 on a pilot day, on the sampling grid.
Instant daytime_start(Rng& rng) {
  const Date day = pilot_day(rng);
  return add_seconds(midnight_of(day), kSampleStep * std::floor(rng.uniform(5040, 13680)));
}

TracePoint make_point(Instant t, GeoPoint loc, ActivityKind kind) {
  return TracePoint{t, loc, 10.0, ActivityLabel{kind, 1.0}, std::nullopt};
}

std::vector<TracePoint> free_ride(Rng& rng, Instant start, GeoPoint origin, double speed_mps,
                                  double heading_rad, int duration_s, ActivityKind kind) {
  std::vector<TracePoint> pts;
  double north = 0.0;
  double east = 0.0;
  double heading = heading_rad;
  for (int t = 0; t <= duration_s; t += kSampleStep) {
    pts.push_back(make_point(add_seconds(start, t), offset_by_meters(origin, north, east), kind));
    heading += rng.uniform(-0.05, 0.05);
    north += std::sin(heading) * speed_mps * kSampleStep;
    east += std::cos(heading) * speed_mps * kSampleStep;
  }
  return pts;
}

PilotTrip bicycle_trip(Rng& rng) {
  PilotTrip trip;
  const Instant start = daytime_start(rng);
  const int duration = kSampleStep * static_cast<int>(rng.uniform(60, 300));
  const GeoPoint origin(rng.uniform(52.35, 52.43), rng.uniform(9.66, 9.80));
  trip.points = free_ride(rng, start, origin, rng.uniform(3.5, 5.5),
                          rng.uniform(0, 2 * std::numbers::pi), duration, ActivityKind::OnBicycle);
  trip.truth = {Mode::Bicycle, std::nullopt, std::nullopt, std::nullopt, double(duration)};
  return trip;
}

PilotTrip walk_trip(Rng& rng) {
  PilotTrip trip;
  const Instant start = daytime_start(rng);
  const int duration = kSampleStep * static_cast<int>(rng.uniform(36, 180));
  const GeoPoint origin(rng.uniform(52.35, 52.43), rng.uniform(9.66, 9.80));
  trip.points = free_ride(rng, start, origin, rng.uniform(1.1, 1.6),
                          rng.uniform(0, 2 * std::numbers::pi), duration, ActivityKind::OnFoot);
  trip.truth = {Mode::Walk, std::nullopt, std::nullopt, std::nullopt, double(duration)};
  return trip;
}

// Cars stay south of 52.34 N, more than 2 km from every stop.
PilotTrip car_trip(Rng& rng) {
  PilotTrip trip;
  const Instant start = daytime_start(rng);
  const int duration = kSampleStep * static_cast<int>(rng.uniform(96, 360));
  const GeoPoint origin(rng.uniform(52.305, 52.330), rng.uniform(9.55, 9.65));
  trip.points = free_ride(rng, start, origin, rng.uniform(9.0, 13.0), 0.0, duration,
                          ActivityKind::InVehicle);
  trip.truth = {Mode::Car, std::nullopt, std::nullopt, std::nullopt, double(duration)};
  return trip;
}

PilotTrip transit_trip(Rng& rng, const GtfsFeed& feed, bool tram) {
  std::vector<const TripSchedule*> pool;
  for (const auto& t : feed.trips()) {
    const Route* r = feed.find_route(t.route_id);
    if ((r->route_type == RouteType::Tram) == tram) pool.push_back(&t);
  }
  const TripSchedule& sched = *pool[rng.index(pool.size())];
  const std::size_t n = sched.stop_times.size();
  const std::size_t a = rng.index(n - 2);
  const std::size_t b = a + 2 + rng.index(n - a - 2);
  const Date day = pilot_day(rng);
  const Instant midnight = midnight_of(day);

  PilotTrip trip;
  const auto& st = sched.stop_times;
  for (std::size_t k = a; k < b; ++k) {
    const GeoPoint from = feed.find_stop(st[k].stop_id)->location;
    const GeoPoint to = feed.find_stop(st[k + 1].stop_id)->location;
    const int t0 = st[k].departure;
    const int t1 = st[k + 1].arrival;
    for (int t = t0; t < t1; t += kSampleStep) {
      trip.points.push_back(make_point(add_seconds(midnight, t),
                                       lerp(from, to, double(t - t0) / (t1 - t0)),
                                       ActivityKind::InVehicle));
    }
  }
  trip.points.push_back(make_point(add_seconds(midnight, st[b].arrival),
                                   feed.find_stop(st[b].stop_id)->location,
                                   ActivityKind::InVehicle));
  trip.truth = {tram ? Mode::Tram : Mode::Bus, st[a].stop_id, st[b].stop_id, sched.route_id,
                double(st[b].arrival - st[a].departure)};
  return trip;
}

void perturb(PilotTrip& trip, Rng& rng, const SyntheticPilotSpec& spec) {
  for (auto& p : trip.points) {
    if (spec.gps_noise_sigma_m > 0.0) {
      const double dn = rng.normal() * spec.gps_noise_sigma_m;
      const double de = rng.normal() * spec.gps_noise_sigma_m;
      p.location = offset_by_meters(p.location, dn, de);
    }
    if (spec.label_corruption > 0.0 && rng.uniform() < spec.label_corruption) {
      p.activity.kind = static_cast<ActivityKind>(rng.index(5));
    }
  }
}

std::string optional_text(const std::optional<std::string>& v) { return v ? *v : std::string(); }

}  // namespace

GtfsFeed synthetic_feed() {
  std::vector<Stop> stops;
  std::vector<Route> routes;
  std::vector<TripSchedule> trips;
  for (const auto& line : kLines) {
    routes.push_back(Route{line.route_id, line.route_id, route_type_from_gtfs(line.gtfs_type),
                           line.gtfs_type});
    for (int k = 0; k < kStopsPerLine; ++k) {
      stops.push_back(Stop{stop_id(line, k), std::string(line.route_id) + " stop " +
                                                 std::to_string(k + 1),
                           stop_location(line, k)});
    }
    for (int dir = 0; dir < 2; ++dir) {
      int seq = 0;
      for (int dep = kFirstDeparture; dep <= kLastDeparture; dep += kHeadway) {
        char id[32];
        std::snprintf(id, sizeof id, "%s-%c-%03d", line.route_id, dir == 0 ? 'E' : 'W', ++seq);
        TripSchedule t{id, line.route_id, "WK", "", {}};
        for (int k = 0; k < kStopsPerLine; ++k) {
          const int stop = dir == 0 ? k : kStopsPerLine - 1 - k;
          const int time = dep + k * line.hop_s;
          t.stop_times.push_back(StopTime{stop_id(line, stop), time, time, k + 1});
        }
        trips.push_back(std::move(t));
      }
    }
  }
  ServiceCalendar calendar;
  calendar.add_rule("WK", CalendarRule{{false, true, true, true, true, true, false},
                                       Date{std::chrono::year{2026} / 1 / 1},
                                       Date{std::chrono::year{2026} / 12 / 31}});
  return GtfsFeed(std::move(stops), std::move(routes), std::move(trips), std::move(calendar));
}

SyntheticPilot generate_pilot(const SyntheticPilotSpec& spec) {
  if (!(spec.label_corruption >= 0.0 && spec.label_corruption <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "label corruption outside [0, 1]");
  }
  if (!(spec.gps_noise_sigma_m >= 0.0) || !std::isfinite(spec.gps_noise_sigma_m)) {
    throw Error(ErrorCode::InvalidArgument, "negative GPS noise sigma");
  }
  if (spec.users == 0) throw Error(ErrorCode::InvalidArgument, "pilot needs at least one user");
  SyntheticPilot pilot{synthetic_feed(), {}};
  Rng rng(spec.seed);
  auto add = [&](std::size_t count, auto make) {
    for (std::size_t i = 0; i < count; ++i) pilot.trips.push_back(make());
  };
  add(spec.bicycle, [&] { return bicycle_trip(rng); });
  add(spec.car, [&] { return car_trip(rng); });
  add(spec.tram, [&] { return transit_trip(rng, pilot.feed, true); });
  add(spec.bus, [&] { return transit_trip(rng, pilot.feed, false); });
  add(spec.walk, [&] { return walk_trip(rng); });
  for (std::size_t i = 0; i < pilot.trips.size(); ++i) {
    auto& trip = pilot.trips[i];
    char token[32];
    std::snprintf(token, sizeof token, "pilot-user-%02zu", rng.index(spec.users) + 1);
    trip.user_token = token;
    perturb(trip, rng, spec);
  }
  return pilot;
}

std::vector<TraceUploadEnvelope> pilot_envelopes(const PilotTrip& trip, std::size_t index) {
  const std::string prefix = "pilot-" + std::to_string(index) + "-";
  const std::size_t half = trip.points.size() / 2;
  std::vector<TracePoint> first(trip.points.begin(), trip.points.begin() + half);
  std::vector<TracePoint> second(trip.points.begin() + half, trip.points.end());
  return {
      {prefix + "start", trip.user_token, std::move(first), RecordingAction::Start},
      {prefix + "append", trip.user_token, std::move(second), RecordingAction::Append},
      {prefix + "stop", trip.user_token, {}, RecordingAction::Stop},
  };
}

std::string truth_to_csv(const std::vector<TripVerdict>& truth) {
  std::string out = "trip_index,mode,entry_stop_id,exit_stop_id,route_id,duration_s\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& t = truth[i];
    out += std::to_string(i) + "," + std::string(to_string(t.mode)) + "," +
           csv_escape(optional_text(t.entry_stop_id)) + "," +
           csv_escape(optional_text(t.exit_stop_id)) + "," + csv_escape(optional_text(t.route_id)) +
           "," + format_double(t.duration_s) + "\n";
  }
  return out;
}

std::vector<TripVerdict> truth_from_csv(const std::string& text) {
  std::istringstream in(text);
  CsvReader reader(in);
  auto first = reader.next();
  if (!first) throw Error(ErrorCode::ParseError, "truth file is empty");
  const CsvHeader header(*first);
  const std::size_t width = first->size();
  const auto col = [&](const char* name) {
    auto i = header.find(name);
    if (!i) throw Error(ErrorCode::ParseError, "truth file lacks column", name);
    return *i;
  };
  const std::size_t c_mode = col("mode"), c_entry = col("entry_stop_id"),
                    c_exit = col("exit_stop_id"), c_route = col("route_id"),
                    c_duration = col("duration_s");
  std::vector<TripVerdict> out;
  while (auto next = reader.next()) {
    const auto& row = *next;
    const std::string where = "truth.csv:" + std::to_string(reader.line());
    if (row.size() != width) throw Error(ErrorCode::ParseError, "column count", where);
    TripVerdict v;
    const auto mode = mode_from_string(row[c_mode]);
    const auto duration = parse_double(row[c_duration]);
    if (!mode || !duration) throw Error(ErrorCode::ParseError, "bad truth row", where);
    v.mode = *mode;
    v.duration_s = *duration;
    if (!row[c_entry].empty()) v.entry_stop_id = row[c_entry];
    if (!row[c_exit].empty()) v.exit_stop_id = row[c_exit];
    if (!row[c_route].empty()) v.route_id = row[c_route];
    out.push_back(std::move(v));
  }
  return out;
}

void write_pilot(const SyntheticPilot& pilot, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "feed");
  pilot.feed.write(dir / "feed");
  std::ofstream traces(dir / "traces.jsonl", std::ios::binary | std::ios::trunc);
  std::vector<TripVerdict> truth;
  for (std::size_t i = 0; i < pilot.trips.size(); ++i) {
    for (const auto& e : pilot_envelopes(pilot.trips[i], i)) {
      traces << envelope_to_json(e).dump() << '\n';
    }
    truth.push_back(pilot.trips[i].truth);
  }
  std::ofstream truth_file(dir / "truth.csv", std::ios::binary | std::ios::trunc);
  truth_file << truth_to_csv(truth);
  if (!traces || !truth_file) throw Error(ErrorCode::Io, "cannot write pilot", dir.string());
}

PilotData read_pilot(const std::filesystem::path& dir) {
  PilotData data{GtfsFeed::load(dir / "feed"), {}, {}};
  std::ifstream traces(dir / "traces.jsonl", std::ios::binary);
  if (!traces) throw Error(ErrorCode::MissingFile, "missing pilot traces", (dir / "traces.jsonl").string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(traces, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      data.envelopes.push_back(envelope_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "malformed trace line",
                  "traces.jsonl:" + std::to_string(n) + ": " + e.what());
    }
  }
  std::ifstream truth(dir / "truth.csv", std::ios::binary);
  if (!truth) throw Error(ErrorCode::MissingFile, "missing pilot truth", (dir / "truth.csv").string());
  std::ostringstream ss;
  ss << truth.rdbuf();
  data.truth = truth_from_csv(ss.str());
  return data;
}

PilotEvaluation evaluate_pilot(const PilotData& data, const PipelineConfig& config) {
  Store store;
  const Instant fixed = parse_instant("2026-06-01T00:00:00Z");
  IngestService ingest(store, SecretKey(std::string(32, 'k')), config, [fixed] { return fixed; });
  ingest.set_feed(std::make_shared<const GtfsFeed>(data.feed));

  std::set<std::string> users;
  for (const auto& e : data.envelopes) users.insert(e.user_token);
  for (const auto& u : users) ingest.grant_consent(u, "pilot");

  std::vector<std::string> trip_ids;
  for (const auto& e : data.envelopes) {
    const SubmitResult r = ingest.submit_trace_batch(e);
    if (e.action == RecordingAction::Stop) trip_ids.push_back(r.trip_id);
  }
  ingest.run_pending_jobs(1);

  PilotEvaluation eval;
  const auto snap = store.snapshot();
  for (const auto& id : trip_ids) {
    TripVerdict v;
    const ClassifiedSegment* longest = nullptr;
    if (auto it = snap->segments.find(id); it != snap->segments.end()) {
      for (const auto& cs : it->second) {
        if (!cs.classification) continue;
        if (!longest || cs.segment.duration_s > longest->segment.duration_s) longest = &cs;
      }
    }
    if (longest) {
      v.mode = longest->classification->label.mode;
      v.duration_s = longest->segment.duration_s;
      if (const auto& e = longest->classification->enrichment) {
        v.entry_stop_id = e->entry_stop_id;
        v.exit_stop_id = e->exit_stop_id;
        v.route_id = e->route_id;
      }
    }
    eval.predicted.push_back(std::move(v));
  }
  eval.report = evaluate_against_ground_truth(eval.predicted, data.truth);
  return eval;
}

}  // namespace tripmine
