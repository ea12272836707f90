#include "tripmine/codec.hpp"

#include "tripmine/error.hpp"

namespace tripmine {
namespace {

Instant instant_field(const json& j, const char* key) {
  return parse_instant(j.at(key).get<std::string>());
}

template <typename Enum, typename Parse>
Enum enum_field(const json& j, const char* key, Parse parse) {
  const auto text = j.at(key).get<std::string>();
  auto v = parse(text);
  if (!v) throw Error(ErrorCode::ParseError, std::string("invalid ") + key, text);
  return *v;
}

template <typename T>
void optional_to(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

void to_json(json& j, const GeoPoint& p) { j = json{{"lat", p.lat()}, {"lon", p.lon()}}; }
void from_json(const json& j, GeoPoint& p) {
  p = GeoPoint(j.at("lat").get<double>(), j.at("lon").get<double>());
}

void to_json(json& j, const Pseudonym& p) { j = p.value(); }
void from_json(const json& j, Pseudonym& p) { p = Pseudonym(j.get<std::string>()); }

void to_json(json& j, const TracePoint& p) {
  j = json{{"t", format_instant(p.timestamp)},
           {"lat", p.location.lat()},
           {"lon", p.location.lon()},
           {"accuracy", p.accuracy_m},
           {"activity", to_string(p.activity.kind)},
           {"confidence", p.activity.confidence}};
  optional_to(j, "speed", p.client_speed_mps);
}

void from_json(const json& j, TracePoint& p) {
  p.timestamp = instant_field(j, "t");
  p.location = GeoPoint(j.at("lat").get<double>(), j.at("lon").get<double>());
  p.accuracy_m = j.at("accuracy").get<double>();
  p.activity.kind = j.contains("activity")
                        ? enum_field<ActivityKind>(j, "activity", activity_kind_from_string)
                        : ActivityKind::Unknown;
  p.activity.confidence = j.value("confidence", 0.0);
  if (p.activity.confidence < 0.0 || p.activity.confidence > 1.0) {
    throw Error(ErrorCode::ParseError, "activity confidence outside [0, 1]");
  }
  p.client_speed_mps.reset();
  if (j.contains("speed") && !j["speed"].is_null()) p.client_speed_mps = j["speed"].get<double>();
}

void to_json(json& j, const Trip& t) {
  j = json{{"trip_id", t.trip_id},
           {"owner", t.owner},
           {"points", t.points},
           {"started_at", format_instant(t.started_at)},
           {"ended_at", format_instant(t.ended_at)}};
}
void from_json(const json& j, Trip& t) {
  t.trip_id = j.at("trip_id").get<std::string>();
  t.owner = j.at("owner").get<Pseudonym>();
  t.points = j.at("points").get<std::vector<TracePoint>>();
  t.started_at = instant_field(j, "started_at");
  t.ended_at = instant_field(j, "ended_at");
}

void to_json(json& j, const Segment& s) {
  j = json{{"trip_id", s.trip_id},
           {"first_index", s.first_index},
           {"points", s.points},
           {"dominant_activity", to_string(s.dominant_activity)},
           {"duration_s", s.duration_s},
           {"length_m", s.length_m}};
}
void from_json(const json& j, Segment& s) {
  s.trip_id = j.at("trip_id").get<std::string>();
  s.first_index = j.at("first_index").get<std::size_t>();
  s.points = j.at("points").get<std::vector<TracePoint>>();
  s.dominant_activity =
      enum_field<ActivityKind>(j, "dominant_activity", activity_kind_from_string);
  s.duration_s = j.at("duration_s").get<double>();
  s.length_m = j.at("length_m").get<double>();
}

void to_json(json& j, const ModeLabel& m) {
  j = json{{"mode", to_string(m.mode)}, {"confidence", m.confidence}};
}
void from_json(const json& j, ModeLabel& m) {
  m.mode = enum_field<Mode>(j, "mode", mode_from_string);
  m.confidence = j.at("confidence").get<double>();
}

void to_json(json& j, const PtEnrichment& e) {
  j = json{{"entry_stop_id", e.entry_stop_id},
           {"exit_stop_id", e.exit_stop_id},
           {"route_id", e.route_id},
           {"trip_id", e.trip_id},
           {"schedule_deviation_s", e.schedule_deviation_s}};
}
void from_json(const json& j, PtEnrichment& e) {
  e.entry_stop_id = j.at("entry_stop_id").get<std::string>();
  e.exit_stop_id = j.at("exit_stop_id").get<std::string>();
  e.route_id = j.at("route_id").get<std::string>();
  e.trip_id = j.at("trip_id").get<std::string>();
  e.schedule_deviation_s = j.at("schedule_deviation_s").get<double>();
}

void to_json(json& j, const Classification& c) {
  j = json{{"label", c.label}};
  optional_to(j, "enrichment", c.enrichment);
}
void from_json(const json& j, Classification& c) {
  c.label = j.at("label").get<ModeLabel>();
  c.enrichment.reset();
  if (j.contains("enrichment")) c.enrichment = j["enrichment"].get<PtEnrichment>();
}

void to_json(json& j, const ClassifiedSegment& s) {
  j = json{{"segment", s.segment}};
  optional_to(j, "classification", s.classification);
}
void from_json(const json& j, ClassifiedSegment& s) {
  s.segment = j.at("segment").get<Segment>();
  s.classification.reset();
  if (j.contains("classification")) s.classification = j["classification"].get<Classification>();
}

void to_json(json& j, const JobRecord& r) {
  json times = json::array();
  for (const auto& [stage, t] : r.stage_times) {
    times.push_back({{"stage", to_string(stage)}, {"at", format_instant(t)}});
  }
  j = json{{"job_id", r.job_id}, {"trip_id", r.trip_id}, {"stage", to_string(r.stage)},
           {"stage_times", times}};
  optional_to(j, "last_error", r.last_error);
}
void from_json(const json& j, JobRecord& r) {
  r.job_id = j.at("job_id").get<std::string>();
  r.trip_id = j.at("trip_id").get<std::string>();
  r.stage = enum_field<JobStage>(j, "stage", job_stage_from_string);
  r.stage_times.clear();
  for (const auto& t : j.at("stage_times")) {
    r.stage_times.emplace_back(enum_field<JobStage>(t, "stage", job_stage_from_string),
                               instant_field(t, "at"));
  }
  r.last_error.reset();
  if (j.contains("last_error")) r.last_error = j["last_error"].get<std::string>();
}

void to_json(json& j, const SubmitResult& r) {
  j = json{{"trip_id", r.trip_id},
           {"points_accepted", r.points_accepted},
           {"points_dropped", r.points_dropped}};
}
void from_json(const json& j, SubmitResult& r) {
  r.trip_id = j.at("trip_id").get<std::string>();
  r.points_accepted = j.at("points_accepted").get<std::size_t>();
  r.points_dropped = j.at("points_dropped").get<std::size_t>();
}

void to_json(json& j, const OpenRecording& r) {
  j = json{{"trip_id", r.trip_id}, {"points", r.points}};
}
void from_json(const json& j, OpenRecording& r) {
  r.trip_id = j.at("trip_id").get<std::string>();
  r.points = j.at("points").get<std::vector<TracePoint>>();
}

void to_json(json& j, const ConsentRecord& r) {
  j = json{{"pseudonym", r.pseudonym},
           {"policy_version", r.policy_version},
           {"granted_at", format_instant(r.granted_at)}};
  if (r.withdrawn_at) j["withdrawn_at"] = format_instant(*r.withdrawn_at);
}
void from_json(const json& j, ConsentRecord& r) {
  r.pseudonym = j.at("pseudonym").get<Pseudonym>();
  r.policy_version = j.at("policy_version").get<std::string>();
  r.granted_at = instant_field(j, "granted_at");
  r.withdrawn_at.reset();
  if (j.contains("withdrawn_at")) r.withdrawn_at = instant_field(j, "withdrawn_at");
}

void to_json(json& j, const SealedIdentifier& s) {
  j = json{{"nonce", s.nonce_hex}, {"ciphertext", s.ciphertext_hex}};
}
void from_json(const json& j, SealedIdentifier& s) {
  s.nonce_hex = j.at("nonce").get<std::string>();
  s.ciphertext_hex = j.at("ciphertext").get<std::string>();
}

void to_json(json& j, const IdentityVaultEntry& e) {
  j = json{{"pseudonym", e.pseudonym},
           {"sealed", e.sealed},
           {"created_at", format_instant(e.created_at)}};
}
void from_json(const json& j, IdentityVaultEntry& e) {
  e.pseudonym = j.at("pseudonym").get<Pseudonym>();
  e.sealed = j.at("sealed").get<SealedIdentifier>();
  e.created_at = instant_field(j, "created_at");
}

void to_json(json& j, const FcdRecord& r) {
  j = json{{"segment_id", r.segment_id},
           {"interval_start", format_instant(r.interval_start)},
           {"avg_speed_kmh", r.avg_speed_kmh}};
}
void from_json(const json& j, FcdRecord& r) {
  r.segment_id = j.at("segment_id").get<std::string>();
  r.interval_start = instant_field(j, "interval_start");
  r.avg_speed_kmh = j.at("avg_speed_kmh").get<double>();
}

namespace {
json endpoint_to_json(const QueryEndpoint& e) {
  if (const auto* id = std::get_if<std::string>(&e)) return json{{"stop_id", *id}};
  return json(std::get<GeoPoint>(e));
}
QueryEndpoint endpoint_from_json(const json& j) {
  if (j.contains("stop_id")) return j["stop_id"].get<std::string>();
  return j.get<GeoPoint>();
}
}  // namespace

void to_json(json& j, const PtQuery& q) {
  j = json{{"origin", endpoint_to_json(q.origin)},
           {"destination", endpoint_to_json(q.destination)},
           {"departure", format_instant(q.departure)},
           {"issued_at", format_instant(q.issued_at)}};
}
void from_json(const json& j, PtQuery& q) {
  q.origin = endpoint_from_json(j.at("origin"));
  q.destination = endpoint_from_json(j.at("destination"));
  q.departure = instant_field(j, "departure");
  q.issued_at = instant_field(j, "issued_at");
}

void to_json(json& j, const TrafficNotification& n) {
  j = json{{"id", n.id},
           {"title", n.title},
           {"description", n.description},
           {"published_at", format_instant(n.published_at)},
           {"category", to_string(n.category)}};
  optional_to(j, "location", n.location);
}
void from_json(const json& j, TrafficNotification& n) {
  n.id = j.at("id").get<std::string>();
  n.title = j.at("title").get<std::string>();
  n.description = j.at("description").get<std::string>();
  n.published_at = instant_field(j, "published_at");
  n.category = categorize_title(n.title);
  n.location.reset();
  if (j.contains("location")) n.location = j["location"].get<GeoPoint>();
}

json street_segment_to_json(const StreetSegment& s) {
  json j{{"segment_id", s.segment_id}, {"geometry", json(std::vector<GeoPoint>(
                                                        s.geometry.points().begin(),
                                                        s.geometry.points().end()))}};
  if (s.name) j["name"] = *s.name;
  if (s.road_class) j["road_class"] = *s.road_class;
  return j;
}

StreetSegment street_segment_from_json(const json& j) {
  StreetSegment s{j.at("segment_id").get<std::string>(),
                  Polyline(j.at("geometry").get<std::vector<GeoPoint>>()), std::nullopt,
                  std::nullopt};
  if (j.contains("name")) s.name = j["name"].get<std::string>();
  if (j.contains("road_class")) s.road_class = j["road_class"].get<std::string>();
  return s;
}

void to_json(json& j, const StoreData& d) {
  json consents = json::object();
  for (const auto& [p, records] : d.consents) consents[p.value()] = records;
  json recordings = json::object();
  for (const auto& [p, rec] : d.recordings) recordings[p.value()] = rec;
  json streets = json::array();
  for (const auto& s : d.streets) streets.push_back(street_segment_to_json(s));
  j = json{{"trips", d.trips},
           {"segments", d.segments},
           {"jobs", d.jobs},
           {"recordings", recordings},
           {"receipts", d.receipts},
           {"consents", consents},
           {"fcd", d.fcd},
           {"queries", d.queries},
           {"notifications", d.notifications},
           {"streets", streets},
           {"next_trip_seq", d.next_trip_seq},
           {"next_job_seq", d.next_job_seq}};
}

void from_json(const json& j, StoreData& d) {
  d = StoreData{};
  d.trips = j.at("trips").get<std::map<std::string, Trip>>();
  d.segments = j.at("segments").get<std::map<std::string, std::vector<ClassifiedSegment>>>();
  d.jobs = j.at("jobs").get<std::map<std::string, JobRecord>>();
  for (const auto& [p, rec] : j.at("recordings").items()) {
    d.recordings.emplace(Pseudonym(p), rec.get<OpenRecording>());
  }
  d.receipts = j.at("receipts").get<std::map<std::string, SubmitResult>>();
  for (const auto& [p, records] : j.at("consents").items()) {
    d.consents.emplace(Pseudonym(p), records.get<std::vector<ConsentRecord>>());
  }
  d.fcd = j.at("fcd").get<std::vector<FcdRecord>>();
  d.queries = j.at("queries").get<std::vector<PtQuery>>();
  d.notifications = j.at("notifications").get<std::vector<TrafficNotification>>();
  for (const auto& s : j.at("streets")) d.streets.push_back(street_segment_from_json(s));
  d.next_trip_seq = j.at("next_trip_seq").get<std::uint64_t>();
  d.next_job_seq = j.at("next_job_seq").get<std::uint64_t>();
}

void to_json(json& j, const VaultData& v) {
  j = json::object();
  for (const auto& [p, entry] : v.entries) j[p.value()] = entry;
}
void from_json(const json& j, VaultData& v) {
  v.entries.clear();
  for (const auto& [p, entry] : j.items()) {
    v.entries.emplace(Pseudonym(p), entry.get<IdentityVaultEntry>());
  }
}

void to_json(json& j, const ModeShare& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"mode", to_string(r.mode)},
                    {"trip_count", r.trip_count},
                    {"total_duration_s", r.total_duration_s},
                    {"count_share", r.count_share},
                    {"duration_share", r.duration_share}});
  }
  j = json{{"rows", rows},
           {"total_trips", s.total_trips},
           {"total_duration_s", s.total_duration_s}};
}

void to_json(json& j, const DatasetStats& s) {
  j = json{{"user_count", s.user_count},
           {"trip_count", s.trip_count},
           {"average_trip_duration_min", s.average_trip_duration_min},
           {"gps_point_count", s.gps_point_count}};
}

void to_json(json& j, const QueryTimeseries& s) {
  j = json{{"stop_id", s.stop_id},
           {"date", format_date(s.date)},
           {"bucket_width_s", s.bucket_width_s},
           {"counts", s.counts}};
}

void to_json(json& j, const CongestionLevel& c) {
  j = json{{"segment_id", c.segment_id},
           {"interval_start", format_instant(c.interval_start)},
           {"level", to_string(c.level)},
           {"speed_ratio", c.speed_ratio}};
}

void to_json(json& j, const EventImpactReport& r) {
  json dates = json::array();
  for (Date d : r.baseline_dates) dates.push_back(format_date(d));
  j = json{{"congestion_at", format_instant(r.congestion_at)},
           {"congestion", r.congestion},
           {"stop_id", r.stop_id},
           {"event_series", r.event_series},
           {"baseline_dates", dates},
           {"baseline", r.baseline},
           {"delta", r.delta}};
}

void to_json(json& j, const ErasureReceipt& r) {
  j = json{{"trips_deleted", r.trips_deleted},
           {"points_deleted", r.points_deleted},
           {"vault_deleted", r.vault_deleted}};
}

}  // namespace tripmine
