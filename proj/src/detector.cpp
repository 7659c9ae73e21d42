// SPDX-License-Identifier: Apache-2.0
#include "affc/detector.hpp"

#include <atomic>
#include <thread>

#include "affc/errors.hpp"

namespace affc {

Probe clean_probe(std::shared_ptr<const ImageBuffer> image) {
  Probe p;
  p.image = std::move(image);
  return p;
}

std::string_view to_string(Transport t) noexcept {
  switch (t) {
    case Transport::builtin:
      return "builtin";
    case Transport::subprocess:
      return "subprocess";
    case Transport::http:
      return "http";
  }
  return "builtin";
}

std::optional<Transport> parse_transport(std::string_view name) noexcept {
  if (name == "builtin") return Transport::builtin;
  if (name == "subprocess") return Transport::subprocess;
  if (name == "http") return Transport::http;
  return std::nullopt;
}

void DetectorConfig::validate() const {
  if (detector_id.empty()) throw ConfigError("detector_id must be nonempty");
  if (max_concurrency == 0) throw ConfigError(detector_id + ": max_concurrency must be >= 1");
  if (timeout.count() <= 0) throw ConfigError(detector_id + ": timeout must be positive");
  if (transport == Transport::builtin) {
    if (!oracle) throw ConfigError(detector_id + ": builtin detector needs an oracle");
    oracle->validate();
  } else if (endpoint.empty()) {
    throw ConfigError(detector_id + ": external detector needs an endpoint");
  }
}

struct DetectorHandle::State {
  explicit State(std::size_t slots)
      : slots(static_cast<std::ptrdiff_t>(slots)) {}
  std::counting_semaphore<> slots;
  std::mutex handshake_mutex;
  std::atomic<std::size_t> invocations{0};
};

namespace {

std::unique_ptr<DetectorBackend> backend_for(const DetectorConfig& config) {
  config.validate();
  switch (config.transport) {
    case Transport::builtin:
      return make_builtin_backend(*config.oracle, "oracle:" + config.detector_id);
    case Transport::subprocess:
      return make_subprocess_backend(config.endpoint, config.max_concurrency,
                                     config.timeout);
    case Transport::http:
      return make_http_backend(config.endpoint, config.timeout);
  }
  throw ConfigError("unknown transport");
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

DetectorHandle::DetectorHandle(DetectorConfig config)
    : DetectorHandle(config, backend_for(config)) {}

DetectorHandle::DetectorHandle(DetectorConfig config,
                               std::unique_ptr<DetectorBackend> backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      state_(std::make_unique<State>(config_.max_concurrency)) {
  if (config_.max_concurrency == 0) {
    throw ConfigError(config_.detector_id + ": max_concurrency must be >= 1");
  }
}

DetectorHandle::~DetectorHandle() = default;
DetectorHandle::DetectorHandle(DetectorHandle&&) noexcept = default;
DetectorHandle& DetectorHandle::operator=(DetectorHandle&&) noexcept = default;

const DetectorMetadata& DetectorHandle::handshake() {
  std::lock_guard lock(state_->handshake_mutex);
  if (!metadata_) {
    DetectorMetadata meta = backend_->handshake();
    if (meta.protocol != kProtocolVersion) {
      throw StartupError(config_.detector_id + ": detector speaks protocol " +
                         std::to_string(meta.protocol) + ", harness speaks " +
                         std::to_string(kProtocolVersion));
    }
    metadata_ = std::move(meta);
  }
  return *metadata_;
}

DetectionSet DetectorHandle::detect(const Probe& probe) {
  handshake();
  SlotGuard slot(state_->slots);
  DetectionSet out;
  try {
    out = backend_->detect(probe);
  } catch (const ProbeError&) {
    throw;
  } catch (const TransportError& e) {
    throw TransportError(std::string(e.what()) + " (probe strength " +
                         std::to_string(probe.strength) + ")");
  } catch (const ProtocolError& e) {
    throw ProtocolError(std::string(e.what()) + " (probe strength " +
                        std::to_string(probe.strength) + ")");
  } catch (const std::exception& e) {
    throw ProbeError(e.what(), probe.strength);
  }
  for (const auto& d : out) {
    if (!d.valid()) {
      throw ProtocolError(config_.detector_id + ": detector returned an invalid detection");
    }
  }
  state_->invocations.fetch_add(1, std::memory_order_relaxed);
  return out;
}

std::size_t DetectorHandle::invocations() const noexcept {
  return state_->invocations.load(std::memory_order_relaxed);
}

DetectorHandle make_oracle_handle(std::string id, OracleSpec spec) {
  DetectorConfig config;
  config.detector_id = std::move(id);
  config.transport = Transport::builtin;
  config.oracle = std::move(spec);
  config.max_concurrency = std::max(1u, std::thread::hardware_concurrency());
  return DetectorHandle(std::move(config));
}

}  // namespace affc
