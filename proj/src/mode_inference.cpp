#include "tripmine/mode_inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "tripmine/error.hpp"

namespace tripmine {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Walk: return "Walk";
    case Mode::Bicycle: return "Bicycle";
    case Mode::Car: return "Car";
    case Mode::Tram: return "Tram";
    case Mode::Bus: return "Bus";
    case Mode::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<Mode> mode_from_string(std::string_view text) {
  for (Mode m : kAllModes) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

bool candidate_less(const MatchCandidate& a, const MatchCandidate& b) {
  return std::tie(a.temporal_score_s, a.spatial_score_m, a.service.route_id, a.service.trip_id,
                  a.entry_stop_id, a.exit_stop_id, a.service.dep_a, a.service_date) <
         std::tie(b.temporal_score_s, b.spatial_score_m, b.service.route_id, b.service.trip_id,
                  b.entry_stop_id, b.exit_stop_id, b.service.dep_a, b.service_date);
}

MatchCandidate score_candidate(const Segment& segment, const GtfsFeed& feed,
                               const PairService& service, const std::string& entry_stop,
                               const std::string& exit_stop, Date service_date) {
  MatchCandidate c;
  c.service = service;
  c.entry_stop_id = entry_stop;
  c.exit_stop_id = exit_stop;
  c.service_date = service_date;

  const Instant midnight = midnight_of(service_date);
  const double obs_start = seconds_between(midnight, segment.points.front().timestamp);
  const double obs_end = seconds_between(midnight, segment.points.back().timestamp);
  c.temporal_score_s =
      0.5 * (std::abs(service.dep_a - obs_start) + std::abs(service.arr_b - obs_end));

  const TripSchedule* trip = feed.find_trip(service.trip_id);
  const std::vector<GeoPoint> path = feed.trip_path(*trip, service.index_a, service.index_b);
  double sum = 0.0;
  for (const TracePoint& p : segment.points) sum += point_to_path_distance(p.location, path);
  c.spatial_score_m = sum / static_cast<double>(segment.points.size());
  return c;
}

std::optional<MatchCandidate> match_transit(const Segment& segment, const GtfsFeed& feed,
                                            const MatchConfig& config) {
  if (segment.points.size() < 2) return std::nullopt;
  const auto entries =
      feed.stop_index().nearest_within(segment.points.front().location, config.entry_radius_m);
  const auto exits =
      feed.stop_index().nearest_within(segment.points.back().location, config.entry_radius_m);
  if (entries.empty() || exits.empty()) return std::nullopt;

  const Instant start = segment.points.front().timestamp;
  const Date start_date = date_of(start);
  std::optional<MatchCandidate> best;
  // Previous service day covers trips running past midnight (times >= 24:00).
  for (Date date : {start_date, start_date - std::chrono::days{1}}) {
    const double obs = seconds_between(midnight_of(date), start);
    const TimeWindow window{static_cast<int>(std::floor(obs - config.temporal_tolerance_s)),
                            static_cast<int>(std::floor(obs + config.temporal_tolerance_s)) + 1};
    for (const Neighbor& a : entries) {
      for (const Neighbor& b : exits) {
        if (a.id == b.id) continue;
        for (const PairService& ps : feed.trips_serving_pair(a.id, b.id, date, window)) {
          if (std::abs(ps.dep_a - obs) > config.temporal_tolerance_s) continue;
          MatchCandidate c = score_candidate(segment, feed, ps, a.id, b.id, date);
          if (c.spatial_score_m > config.spatial_accept_m) continue;
          if (!best || candidate_less(c, *best)) best = std::move(c);
        }
      }
    }
  }
  return best;
}

Classification classify_segment(const Segment& segment, const GtfsFeed& feed,
                                const MatchConfig& config) {
  Classification out;
  const auto& pts = segment.points;
  if (pts.size() < config.min_points || pts.size() < 2) return out;

  // Each point stands for half of the gap on either side.
  std::array<double, 5> weight{};
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double w = 0.0;
    if (i > 0) w += 0.5 * seconds_between(pts[i - 1].timestamp, pts[i].timestamp);
    if (i + 1 < pts.size()) w += 0.5 * seconds_between(pts[i].timestamp, pts[i + 1].timestamp);
    weight[static_cast<std::size_t>(pts[i].activity.kind)] += w;
    total += w;
  }
  if (total <= 0.0) return out;
  if (weight[static_cast<std::size_t>(ActivityKind::Unknown)] > 0.5 * total) return out;

  ActivityKind majority = ActivityKind::Unknown;
  double best = 0.0;
  for (ActivityKind k : {ActivityKind::OnFoot, ActivityKind::OnBicycle, ActivityKind::InVehicle}) {
    const double w = weight[static_cast<std::size_t>(k)];
    if (w > best) {
      best = w;
      majority = k;
    }
  }
  if (majority == ActivityKind::Unknown) return out;
  const double share = best / total;

  switch (majority) {
    case ActivityKind::OnFoot:
      out.label = {Mode::Walk, share};
      return out;
    case ActivityKind::OnBicycle:
      out.label = {Mode::Bicycle, share};
      return out;
    default:
      break;
  }

  out.label.confidence = share * 0.8;
  auto match = match_transit(segment, feed, config);
  if (!match) {
    out.label.mode = Mode::Car;
    return out;
  }
  const Route* route = feed.find_route(match->service.route_id);
  switch (route ? route->route_type : RouteType::Other) {
    case RouteType::Tram: out.label.mode = Mode::Tram; break;
    case RouteType::Bus: out.label.mode = Mode::Bus; break;
    default: out.label.mode = Mode::Unknown; break;
  }
  out.enrichment = PtEnrichment{match->entry_stop_id, match->exit_stop_id,
                                match->service.route_id, match->service.trip_id,
                                match->temporal_score_s};
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

bool is_transit(Mode m) { return m == Mode::Tram || m == Mode::Bus; }

bool verdict_correct(const TripVerdict& p, const TripVerdict& t) {
  if (p.mode != t.mode) return false;
  if (!is_transit(t.mode)) return true;
  return p.entry_stop_id && p.exit_stop_id && p.route_id && p.entry_stop_id == t.entry_stop_id &&
         p.exit_stop_id == t.exit_stop_id && p.route_id == t.route_id;
}

AccuracyRow make_row(std::string label, const std::vector<double>& durations,
                     std::size_t correct) {
  AccuracyRow row;
  row.label = std::move(label);
  row.count = durations.size();
  row.correct = correct;
  row.median_duration_s = median_of(durations);
  row.accuracy = row.count == 0 ? 0.0 : static_cast<double>(correct) / row.count;
  return row;
}

std::string trim_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s;
}

}  // namespace

AccuracyReport evaluate_against_ground_truth(std::span<const TripVerdict> predicted,
                                             std::span<const TripVerdict> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "prediction and ground truth differ in length",
                std::to_string(predicted.size()) + " vs " + std::to_string(truth.size()));
  }
  std::map<Mode, std::pair<std::vector<double>, std::size_t>> by_mode;
  std::vector<double> all_durations;
  std::size_t all_correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [durations, correct] = by_mode[truth[i].mode];
    durations.push_back(truth[i].duration_s);
    all_durations.push_back(truth[i].duration_s);
    if (verdict_correct(predicted[i], truth[i])) {
      ++correct;
      ++all_correct;
    }
  }

  AccuracyReport report;
  for (Mode m : {Mode::Bicycle, Mode::Car, Mode::Tram, Mode::Bus, Mode::Walk, Mode::Unknown}) {
    auto it = by_mode.find(m);
    if (it == by_mode.end()) continue;
    report.rows.push_back(make_row(std::string(to_string(m)), it->second.first,
                                   it->second.second));
  }
  report.total = make_row("Total", all_durations, all_correct);
  return report;
}

std::string format_accuracy_table(const AccuracyReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-8s  %6s  %-15s  %8s\n", "Mode", "Number",
                "Median Duration", "Accuracy");
  out << line;
  auto emit = [&](const AccuracyRow& row) {
    const std::string duration = trim_decimal(row.median_duration_s / 60.0) + " min.";
    const std::string accuracy = trim_decimal(row.accuracy * 100.0) + "%";
    std::snprintf(line, sizeof line, "%-8s  %6zu  %-15s  %8s\n", row.label.c_str(), row.count,
                  duration.c_str(), accuracy.c_str());
    out << line;
  };
  for (const auto& row : report.rows) emit(row);
  emit(report.total);
  return out.str();
}

}  // namespace tripmine
