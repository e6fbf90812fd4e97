#include "internal/http.hpp"

#include "funcnav/error.hpp"
#include "httplib.h"

namespace funcnav::internal {

Endpoint parse_endpoint(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) fail(ErrorCode::kInvalidArgument, "endpoint needs a scheme: " + std::string(url));
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    fail(ErrorCode::kInvalidArgument, "unsupported endpoint scheme: " + std::string(url));
  }
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint out;
  if (path_start == std::string_view::npos) {
    out.scheme_host_port = std::string(url);
  } else {
    out.scheme_host_port = std::string(url.substr(0, path_start));
    out.base_path = std::string(url.substr(path_start));
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
  }
  return out;
}

HttpResponse http_request(const Endpoint& endpoint, std::string_view method, std::string_view path,
                          const std::string& body, const std::vector<std::pair<std::string, std::string>>& headers,
                          std::chrono::seconds timeout, ErrorCode unreachable_code) {
  httplib::Client client(endpoint.scheme_host_port);
  client.set_connection_timeout(std::chrono::seconds(5));
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers header_map;
  for (const auto& [key, value] : headers) header_map.emplace(key, value);
  const std::string full_path = endpoint.base_path + std::string(path);

  httplib::Result result;
  if (method == "GET") {
    result = client.Get(full_path, header_map);
  } else if (method == "POST") {
    result = client.Post(full_path, header_map, body, "application/json");
  } else if (method == "DELETE") {
    result = client.Delete(full_path, header_map);
  } else {
    fail(ErrorCode::kInvalidArgument, "unsupported HTTP method " + std::string(method));
  }
  if (!result) {
    fail(unreachable_code,
         endpoint.scheme_host_port + full_path + ": " + httplib::to_string(result.error()));
  }
  return HttpResponse{result->status, result->body};
}

}  // namespace funcnav::internal
