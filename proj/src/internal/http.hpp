#pragma once

// Thin JSON-over-HTTP helper shared by the remote providers and the
// WebDriver client.

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "funcnav/error.hpp"

namespace funcnav::internal {

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct Endpoint {
  std::string scheme_host_port;  // e.g. "http://127.0.0.1:4444"
  std::string base_path;         // e.g. "/wd/hub", may be empty
};

/// Splits "http://host:port/path" into origin and path; kInvalidArgument on
/// anything that is not http(s).
Endpoint parse_endpoint(std::string_view url);

/// Sends one request. Throws Error(unreachable_code) when the connection
/// fails; HTTP error statuses are returned to the caller.
HttpResponse http_request(const Endpoint& endpoint, std::string_view method, std::string_view path,
                          const std::string& body, const std::vector<std::pair<std::string, std::string>>& headers,
                          std::chrono::seconds timeout, ErrorCode unreachable_code);

}  // namespace funcnav::internal
