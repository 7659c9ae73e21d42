// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "affc/augmentation.hpp"
#include "affc/geometry.hpp"
#include "affc/image.hpp"

namespace affc {

inline constexpr int kProtocolVersion = 1;

/// One detector invocation: the image plus, when it is a synthetic probe,
/// the operator and strength that produced it.
struct Probe {
  std::shared_ptr<const ImageBuffer> image;
  /// Set when the image also exists on disk (cache hit path).
  std::optional<std::filesystem::path> image_path;
  std::optional<OperatorKind> op;
  double strength = 0.0;
};

Probe clean_probe(std::shared_ptr<const ImageBuffer> image);

enum class OracleKind { scripted_threshold, luminance_band };
enum class FailureMode { disappear, class_flip, box_drift };
enum class ConfidenceModel { constant, linear_decay };

/// Built-in detector with analytically known behaviour.
struct OracleSpec {
  OracleKind kind = OracleKind::scripted_threshold;
  /// Scripted oracles fail at strength >= threshold. Operators without an
  /// entry never fail.
  std::map<OperatorKind, double> fail_threshold;
  FailureMode failure_mode = FailureMode::disappear;
  Detection base_detection{"car", {10.0, 10.0, 20.0, 20.0}, 0.9};
  ConfidenceModel confidence_model = ConfidenceModel::constant;
  /// Luminance band oracles detect iff mean luminance is in [lo, hi].
  double band_lo = 40.0;
  double band_hi = 220.0;

  /// Throws ConfigError on out-of-range thresholds or an invalid band.
  void validate() const;
};

/// Pure oracle rule, independent of any handle.
DetectionSet oracle_detect(const OracleSpec& spec, const Probe& probe);

enum class Transport { builtin, subprocess, http };

std::string_view to_string(Transport t) noexcept;
std::optional<Transport> parse_transport(std::string_view name) noexcept;

struct DetectorConfig {
  std::string detector_id;
  Transport transport = Transport::builtin;
  /// Shell command line (subprocess) or base URL (http).
  std::string endpoint;
  std::size_t max_concurrency = 1;
  std::chrono::milliseconds timeout{30000};
  std::optional<OracleSpec> oracle;

  /// Throws ConfigError if the transport-specific fields are inconsistent.
  void validate() const;
};

struct DetectorMetadata {
  std::string name;
  int protocol = kProtocolVersion;
  std::size_t max_concurrency = 1;
};

/// Transport implementation behind a handle.
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual DetectorMetadata handshake() = 0;
  virtual DetectionSet detect(const Probe& probe) = 0;
};

std::unique_ptr<DetectorBackend> make_builtin_backend(OracleSpec spec,
                                                      std::string name);
std::unique_ptr<DetectorBackend> make_subprocess_backend(
    std::string command, std::size_t pool_size,
    std::chrono::milliseconds timeout);
std::unique_ptr<DetectorBackend> make_http_backend(
    std::string base_url, std::chrono::milliseconds timeout);

/// A detector M reachable through some transport. Calls beyond
/// max_concurrency block until a slot frees up.
class DetectorHandle {
 public:
  explicit DetectorHandle(DetectorConfig config);
  DetectorHandle(DetectorConfig config, std::unique_ptr<DetectorBackend> backend);
  ~DetectorHandle();

  DetectorHandle(DetectorHandle&&) noexcept;
  DetectorHandle& operator=(DetectorHandle&&) noexcept;

  const std::string& id() const noexcept { return config_.detector_id; }
  const DetectorConfig& config() const noexcept { return config_; }
  std::size_t max_concurrency() const noexcept { return config_.max_concurrency; }

  /// Validates protocol compatibility and caches the result.
  const DetectorMetadata& handshake();
  const std::optional<DetectorMetadata>& metadata() const noexcept {
    return metadata_;
  }

  /// Runs the detector; performs the handshake first if needed. Errors are
  /// rethrown as ProbeError / TransportError / ProtocolError.
  DetectionSet detect(const Probe& probe);
  /// Number of completed detect() calls on this handle.
  std::size_t invocations() const noexcept;

 private:
  struct State;
  DetectorConfig config_;
  std::unique_ptr<DetectorBackend> backend_;
  std::optional<DetectorMetadata> metadata_;
  std::unique_ptr<State> state_;
};

/// Convenience: a builtin handle around an oracle.
DetectorHandle make_oracle_handle(std::string id, OracleSpec spec);

}  // namespace affc
