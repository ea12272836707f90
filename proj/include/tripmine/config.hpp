#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "tripmine/analytics.hpp"
#include "tripmine/ingest.hpp"

namespace tripmine {

struct ServiceConfig {
  std::string listen = "127.0.0.1:8080";  // host:port
  std::optional<std::filesystem::path> store;
  std::optional<std::filesystem::path> feed;
  std::optional<std::filesystem::path> privacy_key;
  PipelineConfig pipeline;
  CongestionThresholds congestion;
};

/// Keys: listen, store, feed, privacy_key, entry_radius_m,
/// temporal_tolerance_s, spatial_accept_m, min_points, hysteresis_s,
/// merge_floor_s, accuracy_cutoff_m, gap_cutoff_s, heavy_below, medium_below.
/// Unknown keys are rejected.
ServiceConfig config_from_json(const nlohmann::json& j);

using EnvLookup = std::function<const char*(const char*)>;

/// TRIPMINE_LISTEN, TRIPMINE_STORE, TRIPMINE_FEED and TRIPMINE_PRIVACY_KEY
/// override the corresponding keys.
void apply_env_overrides(ServiceConfig& config, const EnvLookup& env);

/// Reads the file named by `path`, or by TRIPMINE_CONFIG when path is empty,
/// then applies environment overrides. No file at all yields the defaults.
ServiceConfig load_config(const std::optional<std::filesystem::path>& path,
                          const EnvLookup& env = [](const char* name) { return std::getenv(name); });

/// Splits "host:port"; InvalidArgument on a malformed address.
std::pair<std::string, int> split_listen_address(const std::string& listen);

}  // namespace tripmine
