#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tripmine/gtfs.hpp"
#include "tripmine/ingest.hpp"
#include "tripmine/mode_inference.hpp"

namespace tripmine {

/// Trip mix and noise model for a synthetic pilot. Noise is isotropic
/// Gaussian position jitter plus uniform activity-label corruption; it is a
/// test signal, not a device model.
struct SyntheticPilotSpec {
  std::size_t bicycle = 16;
  std::size_t car = 14;
  std::size_t tram = 13;
  std::size_t bus = 15;
  std::size_t walk = 0;
  double gps_noise_sigma_m = 0.0;
  double label_corruption = 0.0;  // [0, 1]
  std::uint64_t seed = 7;
  std::size_t users = 6;
};

struct PilotTrip {
  std::string user_token;
  std::vector<TracePoint> points;
  TripVerdict truth;
};

struct SyntheticPilot {
  GtfsFeed feed;
  std::vector<PilotTrip> trips;
};

/// Four east-west lines (two tram, two bus) around 52.37 N, 9.73 E with
/// weekday service every 10 minutes in both directions.
GtfsFeed synthetic_feed();

/// Same input, same pilot. Tram and bus trips ride a sampled GTFS trip
/// between two of its stops on the schedule, so their truth is exact.
SyntheticPilot generate_pilot(const SyntheticPilotSpec& spec);

/// Start, Append and Stop envelopes uploading one trip.
std::vector<TraceUploadEnvelope> pilot_envelopes(const PilotTrip& trip, std::size_t index);

/// Layout: <dir>/feed/ (GTFS), <dir>/traces.jsonl (one envelope per line),
/// <dir>/truth.csv.
void write_pilot(const SyntheticPilot& pilot, const std::filesystem::path& dir);

struct PilotData {
  GtfsFeed feed;
  std::vector<TraceUploadEnvelope> envelopes;
  std::vector<TripVerdict> truth;  // one per Stop envelope, in order
};

PilotData read_pilot(const std::filesystem::path& dir);

struct PilotEvaluation {
  std::vector<TripVerdict> predicted;
  AccuracyReport report;
};

/// Replays the envelopes through a fresh in-memory pipeline. Each trip is
/// predicted by its longest classified segment.
PilotEvaluation evaluate_pilot(const PilotData& data, const PipelineConfig& config = {});

std::string truth_to_csv(const std::vector<TripVerdict>& truth);
std::vector<TripVerdict> truth_from_csv(const std::string& text);

}  // namespace tripmine
