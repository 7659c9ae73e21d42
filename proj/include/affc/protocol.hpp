// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON message shapes shared by the subprocess and HTTP transports.

#include <string>

#include "affc/detector.hpp"
#include "json.hpp"

namespace affc::protocol {

nlohmann::json hello_request();
/// Validates a hello_ack. Version mismatch -> StartupError, schema
/// violation -> ProtocolError.
DetectorMetadata parse_hello_ack(const nlohmann::json& msg);
nlohmann::json hello_ack(const DetectorMetadata& meta);

/// Path mode when the probe has a file, inline base64 PNG otherwise.
nlohmann::json detect_request(const std::string& id, const Probe& probe);

/// Validates a `detections` reply for request `id`. An `error` reply
/// becomes ProbeError.
DetectionSet parse_detect_response(const nlohmann::json& msg,
                                   const std::string& id, double strength);
nlohmann::json detections_response(const std::string& id,
                                   const DetectionSet& items);
nlohmann::json error_response(const std::string& id, const std::string& message);

/// Parses one line of JSON text; malformed text -> ProtocolError.
nlohmann::json parse_line(const std::string& line);

}  // namespace affc::protocol
