// tripmine: operator command line.
//
// Exit codes: 0 ok, 1 user error (bad input, missing file, ...), 2 internal.
// Failures print one JSON object on stderr: {"code", "message", "detail"}.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>

#include "tripmine/analytics.hpp"
#include "tripmine/api.hpp"
#include "tripmine/codec.hpp"
#include "tripmine/config.hpp"
#include "tripmine/error.hpp"
#include "tripmine/gtfs.hpp"
#include "tripmine/ingest.hpp"
#include "tripmine/pilot.hpp"
#include "tripmine/privacy.hpp"
#include "tripmine/sources.hpp"
#include "tripmine/store.hpp"

namespace fs = std::filesystem;
using namespace tripmine;

namespace {

struct Options {
  std::string config_file;
  std::string store;
  std::string feed;
  std::string privacy_key;
};

ServiceConfig resolve(const Options& o) {
  std::optional<fs::path> file;
  if (!o.config_file.empty()) file = o.config_file;
  ServiceConfig c = load_config(file);
  if (!o.store.empty()) c.store = o.store;
  if (!o.feed.empty()) c.feed = o.feed;
  if (!o.privacy_key.empty()) c.privacy_key = o.privacy_key;
  return c;
}

fs::path need_store(const ServiceConfig& c) {
  if (!c.store) throw Error(ErrorCode::InvalidArgument, "no store directory configured", "--store");
  return *c.store;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open input", path);
  return in;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!(out << text)) throw Error(ErrorCode::Io, "cannot write output", path);
}

// Processing never pseudonymizes, so without a configured key a throwaway one
// is enough to construct the service.
SecretKey key_or_ephemeral(const ServiceConfig& c) {
  if (c.privacy_key) return SecretKey::from_file(*c.privacy_key);
  std::random_device rd;
  std::string bytes(SecretKey::kMinBytes, '\0');
  for (auto& b : bytes) b = static_cast<char>(rd());
  return SecretKey(bytes);
}

template <typename T>
nlohmann::json report_json(const ParseReport<T>& report) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : report.errors) {
    errors.push_back({{"line", e.line}, {"kind", to_string(e.kind)}, {"detail", e.detail}});
  }
  return {{"rows_ok", report.records.size()},
          {"rows_failed", report.errors.size()},
          {"errors", errors}};
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tripmine: intermodal trip mining pipeline"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_file, "JSON config file (or TRIPMINE_CONFIG)");
  app.add_option("--store", opt.store, "store directory (or TRIPMINE_STORE)");
  app.add_option("--feed", opt.feed, "GTFS directory (or TRIPMINE_FEED)");
  app.add_option("--privacy-key", opt.privacy_key, "privacy key file (or TRIPMINE_PRIVACY_KEY)");

  std::function<void()> action;

  auto* gtfs = app.add_subcommand("gtfs", "timetable commands");
  gtfs->require_subcommand(1);
  std::string gtfs_dir;
  auto* gtfs_load = gtfs->add_subcommand("load", "validate a GTFS directory and summarize it");
  gtfs_load->add_option("dir", gtfs_dir)->required();
  gtfs_load->callback([&] {
    action = [&] {
      const GtfsFeed feed = GtfsFeed::load(gtfs_dir);
      print({{"stops", feed.stops().size()},
             {"routes", feed.routes().size()},
             {"trips", feed.trips().size()},
             {"stop_times", feed.stop_time_count()}});
    };
  });

  auto* ingest = app.add_subcommand("ingest", "parse a source file, optionally into the store");
  ingest->require_subcommand(1);
  std::string input;
  bool persist = false;
  auto add_ingest = [&](const char* name, const char* help, auto handler) {
    auto* sub = ingest->add_subcommand(name, help);
    sub->add_option("file", input)->required();
    sub->add_flag("--persist", persist, "append parsed records to the store");
    sub->callback([&, handler] { action = [&, handler] { handler(); }; });
  };
  auto persist_with = [&](auto body) {
    if (!persist) return;
    Store store(need_store(resolve(opt)));
    store.transact([&](StoreData& data, VaultData&) { body(data); });
  };
  add_ingest("fcd", "floating car data CSV", [&] {
    auto in = open_input(input);
    auto report = parse_fcd_csv(in);
    persist_with([&](StoreData& d) {
      d.fcd.insert(d.fcd.end(), report.records.begin(), report.records.end());
    });
    print(report_json(report));
  });
  add_ingest("queries", "journey-planner query log CSV", [&] {
    auto in = open_input(input);
    auto report = parse_query_log_csv(in);
    persist_with([&](StoreData& d) {
      d.queries.insert(d.queries.end(), report.records.begin(), report.records.end());
    });
    print(report_json(report));
  });
  add_ingest("feed", "traffic notification RSS", [&] {
    auto in = open_input(input);
    auto result = parse_traffic_feed(in);
    persist_with([&](StoreData& d) {
      for (const auto& n : result.notifications) {
        std::erase_if(d.notifications, [&](const auto& old) { return old.id == n.id; });
        d.notifications.push_back(n);
      }
    });
    print({{"rows_ok", result.notifications.size()},
           {"rows_failed", result.warnings.size()},
           {"errors", result.warnings}});
  });
  add_ingest("segments", "street segment GeoJSON", [&] {
    auto in = open_input(input);
    auto segments = load_street_segments(in);
    persist_with([&](StoreData& d) {
      for (const auto& s : segments) {
        std::erase_if(d.streets, [&](const auto& old) { return old.segment_id == s.segment_id; });
        d.streets.push_back(s);
      }
    });
    print({{"rows_ok", segments.size()}, {"rows_failed", 0}, {"errors", nlohmann::json::array()}});
  });

  auto* pipeline = app.add_subcommand("pipeline", "processing jobs");
  pipeline->require_subcommand(1);
  std::size_t workers = 1;
  auto* pipeline_run = pipeline->add_subcommand("run", "process every pending job");
  pipeline_run->add_option("--workers", workers)->check(CLI::PositiveNumber);
  pipeline_run->callback([&] {
    action = [&] {
      const ServiceConfig c = resolve(opt);
      Store store(need_store(c));
      IngestService service(store, key_or_ephemeral(c), c.pipeline);
      if (c.feed) service.set_feed(std::make_shared<const GtfsFeed>(GtfsFeed::load(*c.feed)));
      const JobTally tally = service.run_pending_jobs(workers);
      nlohmann::json stages = nlohmann::json::object();
      for (const auto& [stage, count] : tally.stage_counts) stages[std::string(to_string(stage))] = count;
      print({{"attempted", tally.attempted},
             {"enriched", tally.enriched},
             {"failed", tally.failed},
             {"parked", tally.parked},
             {"stages", stages}});
    };
  });

  auto* pilot = app.add_subcommand("pilot", "synthetic pilot study");
  pilot->require_subcommand(1);
  SyntheticPilotSpec spec;
  std::string spec_file;
  std::string pilot_dir;
  auto* generate = pilot->add_subcommand("generate", "write feed, traces and ground truth");
  generate->add_option("spec", spec_file, "JSON file with pilot settings; flags override it");
  generate->add_option("--out", pilot_dir, "output directory")->required();
  auto* seed = generate->add_option("--seed", spec.seed);
  auto* sigma = generate->add_option("--sigma", spec.gps_noise_sigma_m, "GPS noise sigma in m");
  auto* corruption = generate->add_option("--corruption", spec.label_corruption);
  auto* bicycle = generate->add_option("--bicycle", spec.bicycle);
  auto* car = generate->add_option("--car", spec.car);
  auto* tram = generate->add_option("--tram", spec.tram);
  auto* bus = generate->add_option("--bus", spec.bus);
  auto* walk = generate->add_option("--walk", spec.walk);
  auto* users = generate->add_option("--users", spec.users);
  generate->callback([&] {
    action = [&] {
      SyntheticPilotSpec s;
      if (!spec_file.empty()) {
        auto in = open_input(spec_file);
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
          s.seed = j.value("seed", s.seed);
          s.gps_noise_sigma_m = j.value("gps_noise_sigma_m", s.gps_noise_sigma_m);
          s.label_corruption = j.value("label_corruption", s.label_corruption);
          s.bicycle = j.value("bicycle", s.bicycle);
          s.car = j.value("car", s.car);
          s.tram = j.value("tram", s.tram);
          s.bus = j.value("bus", s.bus);
          s.walk = j.value("walk", s.walk);
          s.users = j.value("users", s.users);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::ParseError, "malformed pilot settings", e.what());
        }
      }
      if (seed->count()) s.seed = spec.seed;
      if (sigma->count()) s.gps_noise_sigma_m = spec.gps_noise_sigma_m;
      if (corruption->count()) s.label_corruption = spec.label_corruption;
      if (bicycle->count()) s.bicycle = spec.bicycle;
      if (car->count()) s.car = spec.car;
      if (tram->count()) s.tram = spec.tram;
      if (bus->count()) s.bus = spec.bus;
      if (walk->count()) s.walk = spec.walk;
      if (users->count()) s.users = spec.users;
      const SyntheticPilot p = generate_pilot(s);
      write_pilot(p, pilot_dir);
      print({{"trips", p.trips.size()}, {"out", pilot_dir}});
    };
  });
  auto* evaluate = pilot->add_subcommand("evaluate", "run the pipeline on a pilot and score it");
  evaluate->add_option("dir", pilot_dir)->required();
  std::string predictions_out;
  evaluate->add_option("--predictions", predictions_out, "write per-trip predictions as CSV");
  evaluate->callback([&] {
    action = [&] {
      const ServiceConfig c = resolve(opt);
      const PilotEvaluation eval = evaluate_pilot(read_pilot(pilot_dir), c.pipeline);
      if (!predictions_out.empty()) write_text(predictions_out, truth_to_csv(eval.predicted));
      std::cout << format_accuracy_table(eval.report);
    };
  });

  auto* report = app.add_subcommand("report", "analytics over the store");
  report->require_subcommand(1);
  report->add_subcommand("stats", "dataset statistics")->callback([&] {
    action = [&] {
      Store store(need_store(resolve(opt)));
      print(nlohmann::json(dataset_stats(*store.snapshot())));
    };
  });
  std::string user;
  auto* share = report->add_subcommand("mode-share", "mode share of one user or of everyone");
  share->add_option("--user", user, "pseudonym; all users when omitted");
  share->callback([&] {
    action = [&] {
      Store store(need_store(resolve(opt)));
      const auto snap = store.snapshot();
      std::vector<ClassifiedLeg> legs;
      if (!user.empty()) {
        legs = legs_of_user(*snap, Pseudonym(user));
      } else {
        std::set<Pseudonym> owners;
        for (const auto& [id, trip] : snap->trips) owners.insert(trip.owner);
        for (const auto& p : owners) {
          auto l = legs_of_user(*snap, p);
          legs.insert(legs.end(), l.begin(), l.end());
        }
      }
      print(nlohmann::json(mode_share(legs)));
    };
  });
  double lat = 0, lon = 0, radius = 1000;
  std::string when;
  auto* impact = report->add_subcommand("impact", "event impact report around a venue");
  impact->add_option("--lat", lat)->required();
  impact->add_option("--lon", lon)->required();
  impact->add_option("--time", when, "event start, ISO 8601 with zone")->required();
  impact->add_option("--radius", radius)->check(CLI::PositiveNumber);
  impact->callback([&] {
    action = [&] {
      const ServiceConfig c = resolve(opt);
      if (!c.feed) throw Error(ErrorCode::FeedUnavailable, "no GTFS feed configured", "--feed");
      Store store(need_store(c));
      const GtfsFeed feed = GtfsFeed::load(*c.feed);
      EventImpactRequest req;
      req.venue = GeoPoint(lat, lon);
      req.event_time = parse_instant(when);
      req.radius_m = radius;
      req.thresholds = c.congestion;
      const auto snap = store.snapshot();
      print(nlohmann::json(event_impact_report(req, snap->fcd, snap->streets, snap->queries, feed)));
    };
  });

  app.add_subcommand("serve", "serve the HTTP API")->callback([&] {
    action = [&] {
      const ServiceConfig c = resolve(opt);
      if (!c.privacy_key) {
        throw Error(ErrorCode::InvalidArgument, "serve needs a privacy key", "--privacy-key");
      }
      Store store(need_store(c));
      IngestService service(store, SecretKey::from_file(*c.privacy_key), c.pipeline);
      if (c.feed) service.set_feed(std::make_shared<const GtfsFeed>(GtfsFeed::load(*c.feed)));
      ApiService api(service, c.congestion);
      const auto [host, port] = split_listen_address(c.listen);
      std::cerr << "listening on " << host << ":" << port << '\n';
      serve_http(api, host, port);
    };
  });

  auto fail = [](const std::string& code, const std::string& message, const std::string& detail,
                 int exit_code) {
    std::cerr << nlohmann::json{{"code", code}, {"message", message}, {"detail", detail}}.dump()
              << '\n';
    return exit_code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("InvalidArgument", e.what(), "", 1);
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    return fail(std::string(to_string(e.code())), e.what(), e.detail(), 1);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), "", 2);
  }
}
