#pragma once

#include <map>
#include <string>

#include "tripmine/analytics.hpp"
#include "tripmine/error.hpp"
#include "tripmine/ingest.hpp"

namespace tripmine {

struct ApiRequest {
  std::string method;  // GET, POST, DELETE
  std::string path;    // without query string
  std::map<std::string, std::string> query;
  std::string body;
};

/// Splits "path?k=v&..." and percent-decodes the query.
ApiRequest make_request(std::string method, std::string_view target, std::string body = {});

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

int http_status(ErrorCode code);
/// {"code", "message", "detail"}
ApiResponse error_response(const Error& error);

/// Transport-independent request handler. Every failure becomes an error
/// body; handle() itself does not throw.
class ApiService {
 public:
  explicit ApiService(IngestService& ingest, CongestionThresholds thresholds = {});

  ApiResponse handle(const ApiRequest& request);

 private:
  ApiResponse route(const ApiRequest& request);

  IngestService& ingest_;
  CongestionThresholds thresholds_;
};

/// Blocks serving `api` over HTTP until the process is stopped.
void serve_http(ApiService& api, const std::string& host, int port);

}  // namespace tripmine
