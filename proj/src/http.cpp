#include "realvul/http.hpp"

#include <condition_variable>
#include <mutex>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "realvul/error.hpp"

namespace realvul::http {

Reply OfflineTransport::post(const Request& request) {
  throw Error(ErrorCode::kNetworkForbidden, "offline mode refuses request to " + request.url);
}

namespace {

class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(int timeout_seconds) : timeout_(timeout_seconds) {}

  Reply post(const Request& request) override {
    auto scheme_end = request.url.find("://");
    auto path_start = request.url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string origin = path_start == std::string::npos ? request.url : request.url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_, 0);
    client.set_read_timeout(timeout_, 0);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);

    Reply reply;
    auto res = client.Post(path, headers, request.body, "application/json");
    if (!res) {
      reply.error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  }

 private:
  int timeout_;
};

}  // namespace

std::unique_ptr<Transport> make_httplib_transport(int timeout_seconds) {
  return std::make_unique<HttplibTransport>(timeout_seconds);
}

struct InFlightLimiter::State {
  std::mutex mu;
  std::condition_variable cv;
  int available;
};

InFlightLimiter::InFlightLimiter(int limit) : state_(std::make_shared<State>()) {
  state_->available = limit < 1 ? 1 : limit;
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(state_->mu);
  state_->cv.wait(lock, [this] { return state_->available > 0; });
  --state_->available;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(state_->mu);
    ++state_->available;
  }
  state_->cv.notify_one();
}

}  // namespace realvul::http
