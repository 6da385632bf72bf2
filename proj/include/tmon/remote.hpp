#pragma once

// Minimal HTTP/JSON client for the external inference endpoints.

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

namespace tmon {

struct HttpReply {
  int status = 0;
  std::string body;
};

// Bounds the number of concurrent requests to one endpoint.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit);

  class Slot {
   public:
    explicit Slot(InFlightLimiter& l) : l_(&l) { l_->sem_.acquire(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;
    ~Slot() { l_->sem_.release(); }

   private:
    InFlightLimiter* l_;
  };

  Slot acquire() { return Slot(*this); }
  int limit() const { return limit_; }

 private:
  int limit_;
  std::counting_semaphore<1024> sem_;
};

// POSTs a JSON body to endpoint_url + path. Throws TimeoutError when the
// connection or read times out and TransportError when the connection fails.
// Any HTTP status is returned to the caller.
HttpReply post_json(const std::string& endpoint_url, const std::string& path, const std::string& body,
                    std::chrono::milliseconds timeout);

}  // namespace tmon
