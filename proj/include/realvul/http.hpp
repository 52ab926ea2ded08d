#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace realvul::http {

struct Request {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct Reply {
  int status = 0;  // 0 means the transport failed before any HTTP status.
  std::string body;
  std::string error;
};

// Seam between the library and the network. Offline runs install
// OfflineTransport; tests install counting fakes.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Reply post(const Request& request) = 0;
};

// Refuses every request with NetworkForbidden.
class OfflineTransport final : public Transport {
 public:
  Reply post(const Request& request) override;
};

std::unique_ptr<Transport> make_httplib_transport(int timeout_seconds = 120);

// Blocking counting semaphore with a runtime limit.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit);
  void acquire();
  void release();

  class Slot {
   public:
    explicit Slot(InFlightLimiter& l) : limiter_(l) { limiter_.acquire(); }
    ~Slot() { limiter_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    InFlightLimiter& limiter_;
  };

 private:
  struct State;
  std::shared_ptr<State> state_;
};

}  // namespace realvul::http
