#include "tripmine/sources.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "tripmine/csv.hpp"
#include "tripmine/error.hpp"
#include "tripmine/numeric.hpp"

namespace tripmine {

std::string_view to_string(NotificationCategory c) {
  switch (c) {
    case NotificationCategory::Warning: return "Warning";
    case NotificationCategory::Accident: return "Accident";
    case NotificationCategory::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(RowErrorKind kind) {
  switch (kind) {
    case RowErrorKind::ColumnCount: return "ColumnCount";
    case RowErrorKind::EmptyField: return "EmptyField";
    case RowErrorKind::BadInstant: return "BadInstant";
    case RowErrorKind::Misaligned: return "Misaligned";
    case RowErrorKind::BadNumber: return "BadNumber";
    case RowErrorKind::NegativeSpeed: return "NegativeSpeed";
    case RowErrorKind::BadEndpoint: return "BadEndpoint";
    case RowErrorKind::SameEndpoints: return "SameEndpoints";
  }
  return "ColumnCount";
}

namespace {

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct CsvTable {
  CsvReader reader;
  std::vector<std::size_t> columns;
  std::size_t width = 0;

  CsvTable(std::istream& in, std::initializer_list<std::string_view> required) : reader(in) {
    auto header = reader.next();
    if (!header) throw Error(ErrorCode::ParseError, "missing header row", "line 1");
    CsvHeader h(*header);
    width = header->size();
    for (auto name : required) {
      auto idx = h.find(name);
      if (!idx) {
        throw Error(ErrorCode::ParseError, "missing column " + std::string(name), "line 1");
      }
      columns.push_back(*idx);
    }
  }
};

bool aligned_to_quarter_hour(Instant t) {
  using namespace std::chrono;
  return (t.time_since_epoch() % minutes{15}) == milliseconds{0};
}

std::optional<QueryEndpoint> parse_endpoint(const std::string& raw) {
  std::string text = trimmed(raw);
  auto semi = text.find(';');
  if (semi == std::string::npos) return QueryEndpoint{text};
  auto lat = parse_double(std::string_view(text).substr(0, semi));
  auto lon = parse_double(std::string_view(text).substr(semi + 1));
  if (!lat || !lon || !GeoPoint::valid(*lat, *lon)) return std::nullopt;
  return QueryEndpoint{GeoPoint(*lat, *lon)};
}

}  // namespace

ParseReport<FcdRecord> parse_fcd_csv(std::istream& in) {
  CsvTable table(in, {"segment_id", "interval_start", "avg_speed_kmh"});
  ParseReport<FcdRecord> report;
  while (auto row = table.reader.next()) {
    const std::size_t line = table.reader.line();
    if (row->size() != table.width) {
      report.errors.push_back({line, RowErrorKind::ColumnCount, std::to_string(row->size())});
      continue;
    }
    const std::string id = trimmed((*row)[table.columns[0]]);
    if (id.empty()) {
      report.errors.push_back({line, RowErrorKind::EmptyField, "segment_id"});
      continue;
    }
    auto start = try_parse_instant((*row)[table.columns[1]]);
    if (!start) {
      report.errors.push_back({line, RowErrorKind::BadInstant, (*row)[table.columns[1]]});
      continue;
    }
    if (!aligned_to_quarter_hour(*start)) {
      report.errors.push_back({line, RowErrorKind::Misaligned, format_instant(*start)});
      continue;
    }
    auto speed = parse_double((*row)[table.columns[2]]);
    if (!speed) {
      report.errors.push_back({line, RowErrorKind::BadNumber, (*row)[table.columns[2]]});
      continue;
    }
    if (*speed < 0.0) {
      report.errors.push_back({line, RowErrorKind::NegativeSpeed, (*row)[table.columns[2]]});
      continue;
    }
    report.records.push_back({id, *start, *speed});
  }
  return report;
}

std::string serialize_fcd_csv(std::span<const FcdRecord> records) {
  std::string out = "segment_id,interval_start,avg_speed_kmh\n";
  for (const auto& r : records) {
    out += csv_escape(r.segment_id) + ',' + format_instant(r.interval_start) + ',' +
           format_double(r.avg_speed_kmh) + '\n';
  }
  return out;
}

ParseReport<PtQuery> parse_query_log_csv(std::istream& in) {
  CsvTable table(in, {"origin", "destination", "departure", "issued_at"});
  ParseReport<PtQuery> report;
  while (auto row = table.reader.next()) {
    const std::size_t line = table.reader.line();
    if (row->size() != table.width) {
      report.errors.push_back({line, RowErrorKind::ColumnCount, std::to_string(row->size())});
      continue;
    }
    const std::string& o = (*row)[table.columns[0]];
    const std::string& d = (*row)[table.columns[1]];
    if (trimmed(o).empty() || trimmed(d).empty()) {
      report.errors.push_back({line, RowErrorKind::EmptyField, "origin/destination"});
      continue;
    }
    auto origin = parse_endpoint(o);
    auto destination = parse_endpoint(d);
    if (!origin || !destination) {
      report.errors.push_back({line, RowErrorKind::BadEndpoint, origin ? d : o});
      continue;
    }
    auto departure = try_parse_instant((*row)[table.columns[2]]);
    auto issued = try_parse_instant((*row)[table.columns[3]]);
    if (!departure || !issued) {
      report.errors.push_back({line, RowErrorKind::BadInstant,
                               departure ? (*row)[table.columns[3]] : (*row)[table.columns[2]]});
      continue;
    }
    if (*origin == *destination) {
      report.errors.push_back({line, RowErrorKind::SameEndpoints, o});
      continue;
    }
    report.records.push_back({std::move(*origin), std::move(*destination), *departure, *issued});
  }
  return report;
}

std::string format_endpoint(const QueryEndpoint& e) {
  if (const auto* id = std::get_if<std::string>(&e)) return *id;
  const auto& p = std::get<GeoPoint>(e);
  return format_double(p.lat()) + ";" + format_double(p.lon());
}

std::string serialize_query_log_csv(std::span<const PtQuery> queries) {
  std::string out = "origin,destination,departure,issued_at\n";
  for (const auto& q : queries) {
    out += csv_escape(format_endpoint(q.origin)) + ',' + csv_escape(format_endpoint(q.destination)) +
           ',' + format_instant(q.departure) + ',' + format_instant(q.issued_at) + '\n';
  }
  return out;
}

NotificationCategory categorize_title(std::string_view title) {
  const std::string t = lowercase(title);
  if (t.find("unfall") != std::string::npos || t.find("accident") != std::string::npos) {
    return NotificationCategory::Accident;
  }
  if (t.find("warnung") != std::string::npos || t.find("warning") != std::string::npos) {
    return NotificationCategory::Warning;
  }
  return NotificationCategory::Other;
}

FeedParseResult parse_traffic_feed(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    pt::read_xml(in, doc);
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::MalformedXml, "traffic feed is not well-formed XML", e.what());
  }
  auto channel = doc.get_child_optional("rss.channel");
  if (!channel) throw Error(ErrorCode::MalformedXml, "document is not an RSS 2.0 feed");

  FeedParseResult result;
  std::size_t index = 0;
  for (const auto& [name, item] : *channel) {
    if (name != "item") continue;
    ++index;
    auto text = [&item = item](const char* key) {
      auto v = item.get_optional<std::string>(pt::ptree::path_type(key, '/'));
      return v ? trimmed(*v) : std::string{};
    };
    TrafficNotification n;
    n.id = text("guid");
    if (n.id.empty()) n.id = text("link");
    if (n.id.empty()) n.id = "item-" + std::to_string(index);
    n.title = text("title");
    n.description = text("description");
    auto published = try_parse_rfc822(text("pubDate"));
    if (!published) {
      result.warnings.push_back("item " + std::to_string(index) + " (" + n.id +
                                "): missing or invalid pubDate, skipped");
      continue;
    }
    n.published_at = *published;
    n.category = categorize_title(n.title);

    if (auto point = text("georss:point"); !point.empty()) {
      std::istringstream ss(point);
      std::string lat_s, lon_s, rest;
      ss >> lat_s >> lon_s >> rest;
      auto lat = parse_double(lat_s);
      auto lon = parse_double(lon_s);
      if (lat && lon && rest.empty() && GeoPoint::valid(*lat, *lon)) {
        n.location = GeoPoint(*lat, *lon);
      } else {
        result.warnings.push_back("item " + std::to_string(index) + ": invalid georss:point");
      }
    } else if (auto lat = parse_double(text("geo:lat")), lon = parse_double(text("geo:long"));
               lat && lon && GeoPoint::valid(*lat, *lon)) {
      n.location = GeoPoint(*lat, *lon);
    }
    result.notifications.push_back(std::move(n));
  }
  return result;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string serialize_traffic_feed(std::span<const TrafficNotification> items) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<rss version=\"2.0\" xmlns:georss=\"http://www.georss.org/georss\">\n"
      "<channel>\n<title>Traffic notifications</title>\n";
  for (const auto& n : items) {
    out += "<item>\n";
    out += "  <guid isPermaLink=\"false\">" + xml_escape(n.id) + "</guid>\n";
    out += "  <title>" + xml_escape(n.title) + "</title>\n";
    out += "  <description>" + xml_escape(n.description) + "</description>\n";
    out += "  <pubDate>" + format_rfc822(n.published_at) + "</pubDate>\n";
    if (n.location) {
      out += "  <georss:point>" + format_double(n.location->lat()) + " " +
             format_double(n.location->lon()) + "</georss:point>\n";
    }
    out += "</item>\n";
  }
  out += "</channel>\n</rss>\n";
  return out;
}

std::vector<StreetSegment> load_street_segments(std::istream& in) {
  using nlohmann::json;
  std::vector<StreetSegment> out;
  try {
    json doc = json::parse(in);
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
        !doc.contains("features") || !doc["features"].is_array()) {
      throw Error(ErrorCode::MalformedGeoJson, "expected a FeatureCollection");
    }
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t index = 0;
    for (const json& feature : doc["features"]) {
      const std::string where = "feature " + std::to_string(index++);
      if (!feature.is_object() || !feature.contains("geometry") ||
          !feature["geometry"].is_object()) {
        throw Error(ErrorCode::MalformedGeoJson, "feature without geometry", where);
      }
      const json& geometry = feature["geometry"];
      const std::string type = geometry.value("type", "");
      if (type != "LineString") {
        throw Error(ErrorCode::NonLineStringGeometry, "only LineString geometries are accepted",
                    where + ": " + type);
      }
      const json* id = nullptr;
      if (feature.contains("properties") && feature["properties"].is_object() &&
          feature["properties"].contains("segment_id")) {
        id = &feature["properties"]["segment_id"];
      }
      std::string segment_id;
      if (id && id->is_string()) {
        segment_id = id->get<std::string>();
      } else if (id && id->is_number()) {
        segment_id = id->dump();
      }
      if (segment_id.empty()) {
        throw Error(ErrorCode::MissingSegmentId, "feature has no segment_id", where);
      }

      const json& coords = geometry.contains("coordinates") ? geometry["coordinates"] : json();
      if (!coords.is_array()) {
        throw Error(ErrorCode::MalformedGeoJson, "LineString without coordinates", where);
      }
      std::vector<GeoPoint> points;
      for (const json& pos : coords) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
          throw Error(ErrorCode::MalformedGeoJson, "invalid position", where);
        }
        const double lon = pos[0].get<double>();
        const double lat = pos[1].get<double>();
        if (!GeoPoint::valid(lat, lon)) {
          throw Error(ErrorCode::MalformedGeoJson, "position out of range", where);
        }
        points.emplace_back(lat, lon);
      }
      points.erase(std::unique(points.begin(), points.end()), points.end());
      if (points.size() < 2) {
        throw Error(ErrorCode::MalformedGeoJson, "LineString needs two distinct positions", where);
      }
      if (!seen.emplace(segment_id, out.size()).second) {
        throw Error(ErrorCode::MalformedGeoJson, "duplicate segment_id", segment_id);
      }

      StreetSegment seg{segment_id, Polyline(std::move(points)), std::nullopt, std::nullopt};
      const json& props = feature["properties"];
      if (props.contains("name") && props["name"].is_string()) {
        seg.name = props["name"].get<std::string>();
      }
      if (props.contains("road_class") && props["road_class"].is_string()) {
        seg.road_class = props["road_class"].get<std::string>();
      } else if (props.contains("highway") && props["highway"].is_string()) {
        seg.road_class = props["highway"].get<std::string>();
      }
      out.push_back(std::move(seg));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedGeoJson, "invalid GeoJSON document", e.what());
  }
  return out;
}

std::string serialize_street_segments(std::span<const StreetSegment> segments) {
  using nlohmann::json;
  json features = json::array();
  for (const auto& s : segments) {
    json coords = json::array();
    for (const auto& p : s.geometry.points()) coords.push_back({p.lon(), p.lat()});
    json props = {{"segment_id", s.segment_id}};
    if (s.name) props["name"] = *s.name;
    if (s.road_class) props["road_class"] = *s.road_class;
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties", props}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

AlignmentResult align_fcd_to_segments(std::span<const FcdRecord> records,
                                      std::span<const StreetSegment> segments) {
  std::unordered_map<std::string_view, const StreetSegment*> by_id;
  for (const auto& s : segments) by_id.emplace(s.segment_id, &s);
  AlignmentResult result;
  for (const auto& r : records) {
    if (auto it = by_id.find(r.segment_id); it != by_id.end()) {
      result.joined.push_back({r, it->second});
    } else {
      result.unmatched_ids.insert(r.segment_id);
    }
  }
  return result;
}

}  // namespace tripmine
