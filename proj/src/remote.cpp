#include "tmon/remote.hpp"

#include <algorithm>

#include <httplib.h>

#include "tmon/error.hpp"

namespace tmon {

InFlightLimiter::InFlightLimiter(int limit)
    : limit_(std::clamp(limit, 1, 1024)), sem_(std::clamp(limit, 1, 1024)) {}

HttpReply post_json(const std::string& endpoint_url, const std::string& path, const std::string& body,
                    std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint_url);
  if (!client.is_valid()) throw TransportError(endpoint_url, "invalid endpoint url");
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    // httplib reports a read timeout as a plain read error.
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout * 9 / 10)) {
      throw TimeoutError(endpoint_url, "timed out after " + std::to_string(timeout.count()) + " ms");
    }
    throw TransportError(endpoint_url, httplib::to_string(err));
  }
  return {res->status, res->body};
}

}  // namespace tmon
