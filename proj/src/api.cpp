#include "tripmine/api.hpp"

#include <httplib.h>

#include "tripmine/codec.hpp"
#include "tripmine/error.hpp"
#include "tripmine/numeric.hpp"

namespace tripmine {

namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    const std::size_t next = std::min(path.find('/', pos), path.size());
    if (next > pos) parts.emplace_back(path.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

ApiResponse ok(const json& body) { return {200, "application/json", body.dump()}; }

const std::string& required(const ApiRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) {
    throw Error(ErrorCode::InvalidArgument, "missing query parameter", key);
  }
  return it->second;
}

std::optional<std::string> optional_param(const ApiRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

double number_param(const std::string& key, const std::string& value) {
  auto v = parse_double(value);
  if (!v) throw Error(ErrorCode::InvalidArgument, "query parameter is not a number", key);
  return *v;
}

Pseudonym path_pseudonym(const std::string& text) {
  if (!Pseudonym::is_valid(text)) throw Error(ErrorCode::NotFound, "unknown user");
  return Pseudonym(text);
}

json parse_body(const ApiRequest& r) {
  try {
    return json::parse(r.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "request body is not valid JSON", e.what());
  }
}

std::string body_string(const json& body, const char* key, ErrorCode code) {
  if (!body.is_object() || !body.contains(key) || !body[key].is_string()) {
    throw Error(code, "missing string field", key);
  }
  return body[key].get<std::string>();
}

std::shared_ptr<const GtfsFeed> require_feed(const IngestService& ingest) {
  auto feed = ingest.feed();
  if (!feed) throw Error(ErrorCode::FeedUnavailable, "no GTFS feed loaded");
  return feed;
}

}  // namespace

ApiRequest make_request(std::string method, std::string_view target, std::string body) {
  ApiRequest r;
  r.method = std::move(method);
  r.body = std::move(body);
  const auto q = target.find('?');
  r.path = std::string(target.substr(0, q));
  if (q != std::string_view::npos) {
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      const std::string_view pair = rest.substr(0, amp);
      const auto eq = pair.find('=');
      if (!pair.empty()) {
        r.query[percent_decode(pair.substr(0, eq))] =
            eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1));
      }
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
  }
  return r;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownPseudonym:
    case ErrorCode::UnknownStop:
      return 404;
    case ErrorCode::NoConsent:
      return 403;
    case ErrorCode::TooFewPoints:
    case ErrorCode::InsufficientHistory:
      return 422;
    case ErrorCode::FeedUnavailable:
      return 503;
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidEnvelope:
    case ErrorCode::LengthMismatch:
    case ErrorCode::BadReference:
    case ErrorCode::MalformedXml:
    case ErrorCode::MalformedGeoJson:
    case ErrorCode::MissingSegmentId:
    case ErrorCode::NonLineStringGeometry:
    case ErrorCode::WeakKey:
      return 400;
    case ErrorCode::Io:
    case ErrorCode::MissingFile:
    case ErrorCode::DanglingReference:
      return 500;
  }
  return 500;
}

ApiResponse error_response(const Error& error) {
  json body{{"code", to_string(error.code())},
            {"message", error.what()},
            {"detail", error.detail()}};
  return {http_status(error.code()), "application/json", body.dump()};
}

ApiService::ApiService(IngestService& ingest, CongestionThresholds thresholds)
    : ingest_(ingest), thresholds_(thresholds) {}

ApiResponse ApiService::handle(const ApiRequest& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    json body{{"code", "Internal"}, {"message", e.what()}, {"detail", ""}};
    return {500, "application/json", body.dump()};
  }
}

ApiResponse ApiService::route(const ApiRequest& r) {
  const auto parts = split_path(r.path);
  const auto n = parts.size();
  const bool get = r.method == "GET";
  const bool post = r.method == "POST";
  const bool del = r.method == "DELETE";

  if (get && n == 2 && parts[0] == "trips") {
    const auto snap = ingest_.store().snapshot();
    auto it = snap->trips.find(parts[1]);
    if (it == snap->trips.end()) throw Error(ErrorCode::NotFound, "unknown trip", parts[1]);
    json segments = json::array();
    if (auto s = snap->segments.find(parts[1]); s != snap->segments.end()) segments = s->second;
    return ok(json{{"trip", it->second}, {"segments", segments}});
  }
  if (n == 3 && parts[0] == "users" && parts[2] == "stats" && get) {
    const Pseudonym p = path_pseudonym(parts[1]);
    const auto snap = ingest_.store().snapshot();
    if (!is_known_user(*ingest_.store().vault_snapshot(), p)) {
      throw Error(ErrorCode::NotFound, "unknown user");
    }
    return ok(json(mode_share(legs_of_user(*snap, p))));
  }
  if (n == 3 && parts[0] == "users" && parts[2] == "export" && get) {
    const Pseudonym p = path_pseudonym(parts[1]);
    const auto snap = ingest_.store().snapshot();
    const auto vault = ingest_.store().vault_snapshot();
    return {200, "application/x-ndjson", export_user(*snap, *vault, p)};
  }
  if (n == 2 && parts[0] == "users" && del) {
    const Pseudonym p = path_pseudonym(parts[1]);
    return ok(json(erase_user(ingest_.store(), p)));
  }
  if (get && n == 1 && parts[0] == "stats") {
    return ok(json(dataset_stats(*ingest_.store().snapshot())));
  }
  if (get && n == 3 && parts[0] == "stops" && parts[2] == "queries") {
    const Date date = parse_date(required(r, "date"));
    int bucket = 1800;
    if (auto b = optional_param(r, "bucket")) {
      auto v = parse_int(*b);
      if (!v || *v <= 0 || *v > 86'400) throw Error(ErrorCode::InvalidArgument, "invalid bucket");
      bucket = static_cast<int>(*v);
    }
    if (auto feed = ingest_.feed(); feed && !feed->find_stop(parts[1])) {
      throw Error(ErrorCode::NotFound, "unknown stop", parts[1]);
    }
    const auto snap = ingest_.store().snapshot();
    return ok(json(stop_query_timeseries(snap->queries, parts[1], date, bucket)));
  }
  if (get && n == 2 && parts[0] == "segments" && parts[1] == "congestion") {
    const Instant at = parse_instant(required(r, "at"));
    const auto snap = ingest_.store().snapshot();
    return ok(json(congestion_snapshot(snap->fcd, at, thresholds_)));
  }
  if (get && n == 2 && parts[0] == "events" && parts[1] == "impact") {
    EventImpactRequest req;
    req.venue = GeoPoint(number_param("lat", required(r, "lat")),
                         number_param("lon", required(r, "lon")));
    req.event_time = parse_instant(required(r, "time"));
    if (auto radius = optional_param(r, "radius")) {
      req.radius_m = number_param("radius", *radius);
      if (req.radius_m <= 0.0) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
    }
    req.thresholds = thresholds_;
    const auto feed = require_feed(ingest_);
    const auto snap = ingest_.store().snapshot();
    return ok(json(event_impact_report(req, snap->fcd, snap->streets, snap->queries, *feed)));
  }
  if (get && n == 2 && parts[0] == "export" && parts[1] == "trips.geojson") {
    TripFilter filter;
    if (auto u = optional_param(r, "user")) filter.owner = path_pseudonym(*u);
    if (auto f = optional_param(r, "from")) filter.from = parse_date(*f);
    if (auto t = optional_param(r, "to")) filter.to = parse_date(*t);
    if (auto m = optional_param(r, "mode")) {
      filter.mode = mode_from_string(*m);
      if (!filter.mode) throw Error(ErrorCode::InvalidArgument, "unknown mode", *m);
    }
    return {200, "application/geo+json",
            export_trips_geojson(*ingest_.store().snapshot(), filter)};
  }
  if (post && n == 1 && parts[0] == "traces") {
    const json body = parse_body(r);
    return ok(json(ingest_.submit_trace_batch(envelope_from_json(body))));
  }
  if (post && n == 1 && parts[0] == "consent") {
    const json body = parse_body(r);
    const std::string token = body_string(body, "user_token", ErrorCode::InvalidArgument);
    const std::string policy = body_string(body, "policy_version", ErrorCode::InvalidArgument);
    return ok(json{{"pseudonym", ingest_.grant_consent(token, policy)}});
  }
  if (post && n == 2 && parts[0] == "consent" && parts[1] == "withdraw") {
    const json body = parse_body(r);
    return ok(json(ingest_.withdraw_consent(
        body_string(body, "user_token", ErrorCode::InvalidArgument))));
  }
  throw Error(ErrorCode::NotFound, "no such resource", r.method + " " + r.path);
}

void serve_http(ApiService& api, const std::string& host, int port) {
  httplib::Server server;
  auto adapt = [&api](const char* method) {
    return [&api, method](const httplib::Request& req, httplib::Response& res) {
      ApiRequest r{method, req.path, {}, req.body};
      for (const auto& [k, v] : req.params) r.query[k] = v;
      const ApiResponse out = api.handle(r);
      res.status = out.status;
      res.set_content(out.body, out.content_type.c_str());
    };
  };
  server.Get(".*", adapt("GET"));
  server.Post(".*", adapt("POST"));
  server.Delete(".*", adapt("DELETE"));
  if (!server.listen(host.c_str(), port)) {
    throw Error(ErrorCode::Io, "cannot listen", host + ":" + std::to_string(port));
  }
}

}  // namespace tripmine
