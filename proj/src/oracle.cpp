// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "affc/detector.hpp"
#include "affc/errors.hpp"

namespace affc {

void OracleSpec::validate() const {
  for (const auto& [op, t] : fail_threshold) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ConfigError("oracle threshold for " + std::string(to_string(op)) +
                        " must lie in (0, 1]");
    }
  }
  if (!base_detection.valid()) throw ConfigError("oracle base detection is invalid");
  if (kind == OracleKind::luminance_band &&
      !(band_lo >= 0.0 && band_lo <= band_hi && band_hi <= 255.0)) {
    throw ConfigError("luminance band must satisfy 0 <= lo <= hi <= 255");
  }
}

DetectionSet oracle_detect(const OracleSpec& spec, const Probe& probe) {
  bool failing = false;
  switch (spec.kind) {
    case OracleKind::scripted_threshold:
      if (probe.op) {
        auto it = spec.fail_threshold.find(*probe.op);
        failing = it != spec.fail_threshold.end() && probe.strength >= it->second;
      }
      break;
    case OracleKind::luminance_band: {
      if (!probe.image) throw ContractError("luminance oracle needs the probe image");
      const double lum = probe.image->mean_luminance();
      failing = !(lum >= spec.band_lo && lum <= spec.band_hi);
      break;
    }
  }

  Detection d = spec.base_detection;
  if (spec.confidence_model == ConfidenceModel::linear_decay) {
    d.confidence = spec.base_detection.confidence * (1.0 - probe.strength);
  }
  if (!failing) return {d};

  switch (spec.failure_mode) {
    case FailureMode::disappear:
      return {};
    case FailureMode::class_flip:
      d.class_label = "not_" + d.class_label;
      return {d};
    case FailureMode::box_drift:
      // Half-width shift: IoU = 1/3, below the default delta of 0.5.
      d.box.x += d.box.w / 2.0;
      return {d};
  }
  return {};
}

namespace {

class BuiltinBackend final : public DetectorBackend {
 public:
  BuiltinBackend(OracleSpec spec, std::string name)
      : spec_(std::move(spec)), name_(std::move(name)) {
    spec_.validate();
  }

  DetectorMetadata handshake() override { return {name_, kProtocolVersion, 1}; }

  DetectionSet detect(const Probe& probe) override {
    return oracle_detect(spec_, probe);
  }

 private:
  OracleSpec spec_;
  std::string name_;
};

}  // namespace

std::unique_ptr<DetectorBackend> make_builtin_backend(OracleSpec spec,
                                                      std::string name) {
  return std::make_unique<BuiltinBackend>(std::move(spec), std::move(name));
}

}  // namespace affc
