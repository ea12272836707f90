#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tripmine/gtfs.hpp"
#include "tripmine/trace.hpp"

namespace tripmine {

enum class Mode { Walk, Bicycle, Car, Tram, Bus, Unknown };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view text);
inline constexpr Mode kAllModes[] = {Mode::Walk, Mode::Bicycle, Mode::Car,
                                     Mode::Tram, Mode::Bus,     Mode::Unknown};

struct ModeLabel {
  Mode mode = Mode::Unknown;
  double confidence = 0.0;

  friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
};

/// Transit leg identity attached to a public-transport segment.
struct PtEnrichment {
  std::string entry_stop_id;
  std::string exit_stop_id;
  std::string route_id;
  std::string trip_id;
  double schedule_deviation_s = 0.0;  // mean |observed - scheduled| at entry and exit

  friend bool operator==(const PtEnrichment&, const PtEnrichment&) = default;
};

struct MatchCandidate {
  PairService service;
  std::string entry_stop_id;
  std::string exit_stop_id;
  Date service_date{};
  double spatial_score_m = 0.0;   // mean trace-to-route distance
  double temporal_score_s = 0.0;  // mean schedule deviation at entry/exit

  friend bool operator==(const MatchCandidate&, const MatchCandidate&) = default;
};

struct MatchConfig {
  double entry_radius_m = 150.0;
  double temporal_tolerance_s = 300.0;
  double spatial_accept_m = 100.0;
  std::size_t min_points = 10;
};

struct Classification {
  ModeLabel label;
  std::optional<PtEnrichment> enrichment;

  friend bool operator==(const Classification&, const Classification&) = default;
};

/// Strict total order used to pick the winning candidate: temporal score,
/// spatial score, route_id, trip_id, entry stop, exit stop, dep_a, date.
bool candidate_less(const MatchCandidate& a, const MatchCandidate& b);

/// Scores one (entry, exit, trip) triple against the segment's observations.
MatchCandidate score_candidate(const Segment& segment, const GtfsFeed& feed,
                               const PairService& service, const std::string& entry_stop,
                               const std::string& exit_stop, Date service_date);

/// Best schedule match for the segment, or nullopt when no candidate has
/// dep_a within the temporal tolerance and spatial score within acceptance.
std::optional<MatchCandidate> match_transit(const Segment& segment, const GtfsFeed& feed,
                                            const MatchConfig& config = {});

/// Duration-weighted activity majority; InVehicle is resolved to a transit
/// mode when match_transit succeeds and to Car otherwise.
Classification classify_segment(const Segment& segment, const GtfsFeed& feed,
                                const MatchConfig& config = {});

/// Ground truth or prediction for one evaluated trip. Transit trips carry the
/// (entry, exit, route) triple; other modes leave it empty.
struct TripVerdict {
  Mode mode = Mode::Unknown;
  std::optional<std::string> entry_stop_id;
  std::optional<std::string> exit_stop_id;
  std::optional<std::string> route_id;
  double duration_s = 0.0;
};

struct AccuracyRow {
  std::string label;
  std::size_t count = 0;
  std::size_t correct = 0;
  double median_duration_s = 0.0;
  double accuracy = 0.0;  // fraction

  friend bool operator==(const AccuracyRow&, const AccuracyRow&) = default;
};

struct AccuracyReport {
  std::vector<AccuracyRow> rows;  // one per ground-truth mode present
  AccuracyRow total;
};

/// A transit trip is correct only when mode, entry stop, exit stop and line
/// all agree; other trips are judged on mode. Rows are keyed by the true mode.
/// Throws LengthMismatch when the lists differ in length.
AccuracyReport evaluate_against_ground_truth(std::span<const TripVerdict> predicted,
                                             std::span<const TripVerdict> truth);

/// Renders "Mode / Number / Median Duration / Accuracy" with a Total row.
std::string format_accuracy_table(const AccuracyReport& report);

}  // namespace tripmine
