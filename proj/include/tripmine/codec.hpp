#pragma once

// JSON mapping for domain records. Used by the persistence layer, the export
// dump and the HTTP API; field names here are the wire format.

#include <json.hpp>

#include "tripmine/analytics.hpp"
#include "tripmine/store.hpp"

namespace tripmine {

using nlohmann::json;

void to_json(json& j, const GeoPoint& p);
void from_json(const json& j, GeoPoint& p);
void to_json(json& j, const Pseudonym& p);
void from_json(const json& j, Pseudonym& p);

void to_json(json& j, const TracePoint& p);
void from_json(const json& j, TracePoint& p);
void to_json(json& j, const Trip& t);
void from_json(const json& j, Trip& t);
void to_json(json& j, const Segment& s);
void from_json(const json& j, Segment& s);
void to_json(json& j, const ModeLabel& m);
void from_json(const json& j, ModeLabel& m);
void to_json(json& j, const PtEnrichment& e);
void from_json(const json& j, PtEnrichment& e);
void to_json(json& j, const Classification& c);
void from_json(const json& j, Classification& c);
void to_json(json& j, const ClassifiedSegment& s);
void from_json(const json& j, ClassifiedSegment& s);
void to_json(json& j, const JobRecord& r);
void from_json(const json& j, JobRecord& r);
void to_json(json& j, const SubmitResult& r);
void from_json(const json& j, SubmitResult& r);
void to_json(json& j, const OpenRecording& r);
void from_json(const json& j, OpenRecording& r);
void to_json(json& j, const ConsentRecord& r);
void from_json(const json& j, ConsentRecord& r);
void to_json(json& j, const SealedIdentifier& s);
void from_json(const json& j, SealedIdentifier& s);
void to_json(json& j, const IdentityVaultEntry& e);
void from_json(const json& j, IdentityVaultEntry& e);
void to_json(json& j, const FcdRecord& r);
void from_json(const json& j, FcdRecord& r);
void to_json(json& j, const PtQuery& q);
void from_json(const json& j, PtQuery& q);
void to_json(json& j, const TrafficNotification& n);
void from_json(const json& j, TrafficNotification& n);
void to_json(json& j, const StoreData& d);
void from_json(const json& j, StoreData& d);
void to_json(json& j, const VaultData& v);
void from_json(const json& j, VaultData& v);

void to_json(json& j, const ModeShare& s);
void to_json(json& j, const DatasetStats& s);
void to_json(json& j, const QueryTimeseries& s);
void to_json(json& j, const CongestionLevel& c);
void to_json(json& j, const EventImpactReport& r);
void to_json(json& j, const ErasureReceipt& r);

json street_segment_to_json(const StreetSegment& s);
StreetSegment street_segment_from_json(const json& j);

}  // namespace tripmine
