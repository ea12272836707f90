#include "tripmine/config.hpp"

#include <cmath>
#include <fstream>

#include "tripmine/error.hpp"
#include "tripmine/numeric.hpp"

namespace tripmine {

namespace {

double positive(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) throw Error(ErrorCode::InvalidArgument, "config value must be a number", key);
  const double v = j.get<double>();
  if (!std::isfinite(v) || v <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "config value must be positive", key);
  }
  return v;
}

std::string text(const nlohmann::json& j, const std::string& key) {
  if (!j.is_string()) throw Error(ErrorCode::InvalidArgument, "config value must be a string", key);
  return j.get<std::string>();
}

}  // namespace

ServiceConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be an object");
  ServiceConfig c;
  auto& t = c.pipeline.trace;
  auto& m = c.pipeline.match;
  for (const auto& [key, v] : j.items()) {
    if (key == "listen") c.listen = text(v, key);
    else if (key == "store") c.store = text(v, key);
    else if (key == "feed") c.feed = text(v, key);
    else if (key == "privacy_key") c.privacy_key = text(v, key);
    else if (key == "entry_radius_m") m.entry_radius_m = positive(v, key);
    else if (key == "temporal_tolerance_s") m.temporal_tolerance_s = positive(v, key);
    else if (key == "spatial_accept_m") m.spatial_accept_m = positive(v, key);
    else if (key == "min_points") m.min_points = static_cast<std::size_t>(positive(v, key));
    else if (key == "hysteresis_s") t.hysteresis_s = positive(v, key);
    else if (key == "merge_floor_s") t.merge_floor_s = positive(v, key);
    else if (key == "accuracy_cutoff_m") t.accuracy_cutoff_m = positive(v, key);
    else if (key == "gap_cutoff_s") t.gap_cutoff_s = positive(v, key);
    else if (key == "heavy_below") c.congestion.heavy_below = positive(v, key);
    else if (key == "medium_below") c.congestion.medium_below = positive(v, key);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key", key);
  }
  if (c.congestion.heavy_below > c.congestion.medium_below) {
    throw Error(ErrorCode::InvalidArgument, "heavy_below exceeds medium_below");
  }
  split_listen_address(c.listen);
  return c;
}

void apply_env_overrides(ServiceConfig& config, const EnvLookup& env) {
  if (const char* v = env("TRIPMINE_LISTEN"); v && *v) config.listen = v;
  if (const char* v = env("TRIPMINE_STORE"); v && *v) config.store = v;
  if (const char* v = env("TRIPMINE_FEED"); v && *v) config.feed = v;
  if (const char* v = env("TRIPMINE_PRIVACY_KEY"); v && *v) config.privacy_key = v;
  split_listen_address(config.listen);
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
  std::optional<std::filesystem::path> file = path;
  if (!file) {
    if (const char* v = env("TRIPMINE_CONFIG"); v && *v) file = v;
  }
  ServiceConfig config;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot read config", file->string());
    try {
      config = config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "malformed config", file->string() + ": " + e.what());
    }
  }
  apply_env_overrides(config, env);
  return config;
}

std::pair<std::string, int> split_listen_address(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::InvalidArgument, "listen address must be host:port", listen);
  }
  const auto port = parse_int(std::string_view(listen).substr(colon + 1));
  if (!port || *port <= 0 || *port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "invalid listen port", listen);
  }
  return {listen.substr(0, colon), static_cast<int>(*port)};
}

}  // namespace tripmine
