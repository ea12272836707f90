#include "tripmine/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "tripmine/codec.hpp"
#include "tripmine/error.hpp"

namespace tripmine {

namespace {

std::string sequence_id(const char* prefix, std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06llu", prefix, static_cast<unsigned long long>(n));
  return buf;
}

bool has_stage(const JobRecord& job, JobStage stage) {
  return std::any_of(job.stage_times.begin(), job.stage_times.end(),
                     [&](const auto& st) { return st.first == stage; });
}

void advance(JobRecord& job, JobStage stage, Instant at) {
  if (!has_stage(job, stage)) job.stage_times.emplace_back(stage, at);
  job.stage = stage;
}

bool usable(const TracePoint& p, const TraceConfig& config) {
  return std::isfinite(p.accuracy_m) && p.accuracy_m >= 0.0 &&
         p.accuracy_m <= config.accuracy_cutoff_m;
}

}  // namespace

std::string_view to_string(RecordingAction action) {
  switch (action) {
    case RecordingAction::Start: return "Start";
    case RecordingAction::Append: return "Append";
    case RecordingAction::Stop: return "Stop";
  }
  return "Append";
}

std::optional<RecordingAction> recording_action_from_string(std::string_view text) {
  if (text == "Start") return RecordingAction::Start;
  if (text == "Append") return RecordingAction::Append;
  if (text == "Stop") return RecordingAction::Stop;
  return std::nullopt;
}

TraceUploadEnvelope envelope_from_json(const nlohmann::json& j) {
  TraceUploadEnvelope e;
  try {
    e.client_message_id = j.at("client_message_id").get<std::string>();
    e.user_token = j.at("user_token").get<std::string>();
    const auto action = recording_action_from_string(j.at("action").get<std::string>());
    if (!action) throw Error(ErrorCode::InvalidEnvelope, "unknown recording action");
    e.action = *action;
    if (j.contains("points")) e.points = j["points"].get<std::vector<TracePoint>>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidEnvelope, "malformed envelope", ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::InvalidEnvelope) throw;
    throw Error(ErrorCode::InvalidEnvelope, ex.what(), ex.detail());
  }
  return e;
}

nlohmann::json envelope_to_json(const TraceUploadEnvelope& e) {
  return json{{"client_message_id", e.client_message_id},
              {"user_token", e.user_token},
              {"action", to_string(e.action)},
              {"points", e.points}};
}

Clock system_clock() {
  return [] { return std::chrono::time_point_cast<std::chrono::milliseconds>(
                  std::chrono::system_clock::now()); };
}

IngestService::IngestService(Store& store, SecretKey key, PipelineConfig config, Clock clock)
    : store_(store), key_(std::move(key)), config_(config), clock_(std::move(clock)) {}

void IngestService::set_feed(std::shared_ptr<const GtfsFeed> feed) {
  std::lock_guard lock(feed_mutex_);
  feed_ = std::move(feed);
}

std::shared_ptr<const GtfsFeed> IngestService::feed() const {
  std::lock_guard lock(feed_mutex_);
  return feed_;
}

Pseudonym IngestService::grant_consent(std::string_view user_token, std::string policy_version) {
  return tripmine::grant_consent(store_, key_, user_token, std::move(policy_version), clock_());
}

ErasureReceipt IngestService::withdraw_consent(std::string_view user_token) {
  return tripmine::withdraw_consent(store_, pseudonymize(user_token, key_), clock_());
}

SubmitResult IngestService::submit_trace_batch(const TraceUploadEnvelope& envelope) {
  if (envelope.client_message_id.empty()) {
    throw Error(ErrorCode::InvalidEnvelope, "empty client_message_id");
  }
  if (envelope.user_token.empty()) throw Error(ErrorCode::InvalidEnvelope, "empty user_token");
  for (std::size_t i = 1; i < envelope.points.size(); ++i) {
    if (envelope.points[i].timestamp < envelope.points[i - 1].timestamp) {
      throw Error(ErrorCode::InvalidEnvelope, "points out of time order",
                  "index " + std::to_string(i));
    }
  }
  const Pseudonym p = pseudonymize(envelope.user_token, key_);
  const std::string key = receipt_key(p, envelope.client_message_id);

  {
    const auto snap = store_.snapshot();
    if (auto it = snap->receipts.find(key); it != snap->receipts.end()) return it->second;
    if (!has_active_consent(*snap, p)) {
      throw Error(ErrorCode::NoConsent, "no active consent for user", p.value());
    }
  }

  const Instant now = clock_();
  return store_.transact([&](StoreData& data, VaultData&) {
    if (auto it = data.receipts.find(key); it != data.receipts.end()) return it->second;
    if (!has_active_consent(data, p)) {
      throw Error(ErrorCode::NoConsent, "no active consent for user", p.value());
    }
    const std::size_t accepted = static_cast<std::size_t>(
        std::count_if(envelope.points.begin(), envelope.points.end(),
                      [&](const TracePoint& pt) { return usable(pt, config_.trace); }));
    SubmitResult result;
    switch (envelope.action) {
      case RecordingAction::Start: {
        const std::string trip_id = sequence_id("trp", data.next_trip_seq++);
        data.recordings.insert_or_assign(p, OpenRecording{trip_id, envelope.points});
        result = {trip_id, accepted, envelope.points.size() - accepted};
        break;
      }
      case RecordingAction::Append: {
        auto it = data.recordings.find(p);
        if (it == data.recordings.end()) {
          throw Error(ErrorCode::InvalidEnvelope, "no open recording", envelope.client_message_id);
        }
        auto& buf = it->second.points;
        buf.insert(buf.end(), envelope.points.begin(), envelope.points.end());
        result = {it->second.trip_id, accepted, envelope.points.size() - accepted};
        break;
      }
      case RecordingAction::Stop: {
        auto it = data.recordings.find(p);
        if (it == data.recordings.end()) {
          throw Error(ErrorCode::InvalidEnvelope, "no open recording", envelope.client_message_id);
        }
        std::vector<TracePoint> all = it->second.points;
        all.insert(all.end(), envelope.points.begin(), envelope.points.end());
        AssembledTrip assembled = assemble_trip(p, it->second.trip_id, std::move(all), config_.trace);
        const std::string trip_id = assembled.trip.trip_id;
        result = {trip_id, assembled.trip.points.size(), assembled.dropped};
        data.trips.insert_or_assign(trip_id, std::move(assembled.trip));
        data.recordings.erase(it);
        const std::string job_id = sequence_id("job", data.next_job_seq++);
        JobRecord job{job_id, trip_id, JobStage::Received, {{JobStage::Received, now}}, {}};
        data.jobs.emplace(job_id, std::move(job));
        break;
      }
    }
    data.receipts.emplace(key, result);
    return result;
  });
}

JobRecord IngestService::run_processing_job(const std::string& job_id) {
  {
    std::lock_guard lock(inflight_mutex_);
    if (!inflight_.insert(job_id).second) {
      throw Error(ErrorCode::InvalidArgument, "job already running", job_id);
    }
  }
  struct Release {
    IngestService* self;
    const std::string& id;
    ~Release() {
      std::lock_guard lock(self->inflight_mutex_);
      self->inflight_.erase(id);
    }
  } release{this, job_id};
  return process(job_id);
}

JobRecord IngestService::process(const std::string& job_id) {
  const auto snap = store_.snapshot();
  const auto job_it = snap->jobs.find(job_id);
  if (job_it == snap->jobs.end()) throw Error(ErrorCode::NotFound, "unknown job", job_id);
  const JobRecord& job = job_it->second;
  if (job.stage == JobStage::Enriched || job.stage == JobStage::Failed) return job;

  auto fail = [&](const std::string& message) {
    return store_.transact([&](StoreData& data, VaultData&) {
      auto it = data.jobs.find(job_id);
      if (it == data.jobs.end()) throw Error(ErrorCode::NotFound, "job erased", job_id);
      advance(it->second, JobStage::Failed, clock_());
      it->second.last_error = message;
      return it->second;
    });
  };

  const auto trip_it = snap->trips.find(job.trip_id);
  if (trip_it == snap->trips.end()) return fail("trip missing: " + job.trip_id);

  std::vector<Segment> segments;
  try {
    segments = segment_by_activity(trip_it->second, config_.trace);
  } catch (const std::exception& e) {
    return fail(e.what());
  }

  const auto feed = this->feed();
  if (!feed) {
    store_.transact([&](StoreData& data, VaultData&) {
      auto it = data.jobs.find(job_id);
      if (it == data.jobs.end()) throw Error(ErrorCode::NotFound, "job erased", job_id);
      std::vector<ClassifiedSegment> parked;
      for (const auto& s : segments) parked.push_back({s, std::nullopt});
      data.segments.insert_or_assign(job.trip_id, std::move(parked));
      advance(it->second, JobStage::Segmented, clock_());
      it->second.last_error = std::string(to_string(ErrorCode::FeedUnavailable));
    });
    throw Error(ErrorCode::FeedUnavailable, "no GTFS feed loaded", job_id);
  }

  std::vector<ClassifiedSegment> classified;
  try {
    for (auto& s : segments) {
      Classification c = classify_segment(s, *feed, config_.match);
      classified.push_back({std::move(s), std::move(c)});
    }
  } catch (const std::exception& e) {
    return fail(e.what());
  }

  return store_.transact([&](StoreData& data, VaultData&) {
    auto it = data.jobs.find(job_id);
    if (it == data.jobs.end() || !data.trips.contains(job.trip_id)) {
      throw Error(ErrorCode::NotFound, "job erased", job_id);
    }
    data.segments.insert_or_assign(job.trip_id, std::move(classified));
    const Instant now = clock_();
    advance(it->second, JobStage::Segmented, now);
    advance(it->second, JobStage::Classified, now);
    advance(it->second, JobStage::Enriched, now);
    it->second.last_error.reset();
    return it->second;
  });
}

std::vector<std::string> IngestService::pending_jobs() const {
  std::vector<std::string> out;
  for (const auto& [id, job] : store_.snapshot()->jobs) {
    if (job.stage == JobStage::Received || job.stage == JobStage::Segmented) out.push_back(id);
  }
  return out;
}

JobTally IngestService::run_pending_jobs(std::size_t workers) {
  const auto pending = pending_jobs();
  JobTally tally;
  tally.attempted = pending.size();
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> enriched{0}, failed{0}, parked{0};
  auto work = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      try {
        const JobRecord r = run_processing_job(pending[i]);
        (r.stage == JobStage::Enriched ? enriched : failed)++;
      } catch (const Error& e) {
        (e.code() == ErrorCode::FeedUnavailable ? parked : failed)++;
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, pending.size()));
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  tally.enriched = enriched;
  tally.failed = failed;
  tally.parked = parked;
  for (const auto& [id, job] : store_.snapshot()->jobs) ++tally.stage_counts[job.stage];
  return tally;
}

std::string export_trips_geojson(const StoreData& data, const TripFilter& filter) {
  using ojson = nlohmann::ordered_json;
  ojson features = ojson::array();
  for (const auto& [trip_id, trip] : data.trips) {
    if (filter.owner && trip.owner != *filter.owner) continue;
    const Date day = date_of(trip.started_at);
    if (filter.from && day < *filter.from) continue;
    if (filter.to && day > *filter.to) continue;
    const auto segs = data.segments.find(trip_id);
    if (segs == data.segments.end()) continue;
    for (const auto& cs : segs->second) {
      if (!cs.classification) continue;
      const Mode mode = cs.classification->label.mode;
      if (filter.mode && mode != *filter.mode) continue;
      ojson coords = ojson::array();
      for (const auto& pt : cs.segment.points) {
        coords.push_back(ojson::array({pt.location.lon(), pt.location.lat()}));
      }
      if (coords.size() == 1) coords.push_back(coords.front());
      ojson props;
      props["trip_id"] = trip_id;
      props["mode"] = std::string(to_string(mode));
      props["duration_s"] = cs.segment.duration_s;
      props["length_m"] = cs.segment.length_m;
      if (const auto& e = cs.classification->enrichment; e) {
        props["entry_stop"] = e->entry_stop_id;
        props["exit_stop"] = e->exit_stop_id;
        props["route"] = e->route_id;
      }
      ojson feature;
      feature["type"] = "Feature";
      feature["geometry"] = ojson{{"type", "LineString"}, {"coordinates", std::move(coords)}};
      feature["properties"] = std::move(props);
      features.push_back(std::move(feature));
    }
  }
  ojson doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump();
}

}  // namespace tripmine
