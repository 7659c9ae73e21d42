// SPDX-License-Identifier: Apache-2.0
// Detector served over HTTP: GET /hello and POST /detect carry the same JSON
// bodies as the line protocol.

#include <atomic>

#include "affc/detector.hpp"
#include "affc/errors.hpp"
#include "affc/protocol.hpp"
#include "httplib.h"

namespace affc {

namespace {

class HttpBackend final : public DetectorBackend {
 public:
  HttpBackend(std::string base_url, std::chrono::milliseconds timeout)
      : base_url_(std::move(base_url)), timeout_(timeout) {}

  DetectorMetadata handshake() override {
    auto client = make_client();
    auto res = client.Get("/hello");
    if (!res) {
      throw TransportError("GET " + base_url_ + "/hello failed: " +
                           httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw StartupError("GET /hello returned HTTP " + std::to_string(res->status));
    }
    return protocol::parse_hello_ack(protocol::parse_line(res->body));
  }

  DetectionSet detect(const Probe& probe) override {
    const std::string id = std::to_string(next_id_.fetch_add(1));
    auto client = make_client();
    auto res = client.Post("/detect", protocol::detect_request(id, probe).dump(),
                           "application/json");
    if (!res) {
      if (res.error() == httplib::Error::Read) {
        throw ProbeError("detector timed out or dropped the connection", probe.strength);
      }
      throw TransportError("POST " + base_url_ + "/detect failed: " +
                           httplib::to_string(res.error()));
    }
    // Error bodies follow the protocol and are parsed below; anything else
    // with a failing status is a protocol violation.
    nlohmann::json msg;
    try {
      msg = protocol::parse_line(res->body);
    } catch (const ProtocolError&) {
      throw ProtocolError("POST /detect returned HTTP " + std::to_string(res->status) +
                          " with a non-JSON body");
    }
    return protocol::parse_detect_response(msg, id, probe.strength);
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(base_url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    return client;
  }

  std::string base_url_;
  std::chrono::milliseconds timeout_;
  std::atomic<std::uint64_t> next_id_{1};
};

}  // namespace

std::unique_ptr<DetectorBackend> make_http_backend(std::string base_url,
                                                   std::chrono::milliseconds timeout) {
  return std::make_unique<HttpBackend>(std::move(base_url), timeout);
}

}  // namespace affc
