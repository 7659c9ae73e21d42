// SPDX-License-Identifier: Apache-2.0
#include "affc/protocol.hpp"

#include <cmath>
#include <filesystem>

#include "affc/codec.hpp"
#include "affc/errors.hpp"

namespace affc::protocol {

using nlohmann::json;

json hello_request() { return {{"type", "hello"}, {"protocol", kProtocolVersion}}; }

json hello_ack(const DetectorMetadata& meta) {
  return {{"type", "hello_ack"},
          {"protocol", meta.protocol},
          {"name", meta.name},
          {"max_concurrency", meta.max_concurrency}};
}

DetectorMetadata parse_hello_ack(const json& msg) {
  if (!msg.is_object() || msg.value("type", "") != "hello_ack") {
    throw ProtocolError("expected a hello_ack message");
  }
  if (!msg.contains("protocol") || !msg["protocol"].is_number_integer()) {
    throw ProtocolError("hello_ack without an integer protocol field");
  }
  DetectorMetadata meta;
  meta.protocol = msg["protocol"].get<int>();
  if (meta.protocol != kProtocolVersion) {
    throw StartupError("detector speaks protocol " + std::to_string(meta.protocol) +
                       ", harness speaks " + std::to_string(kProtocolVersion));
  }
  if (!msg.contains("name") || !msg["name"].is_string() ||
      msg["name"].get<std::string>().empty()) {
    throw ProtocolError("hello_ack without a name");
  }
  meta.name = msg["name"].get<std::string>();
  if (msg.contains("max_concurrency")) {
    const auto& mc = msg["max_concurrency"];
    if (!mc.is_number_integer() || mc.get<long long>() < 1) {
      throw ProtocolError("hello_ack max_concurrency must be a positive integer");
    }
    meta.max_concurrency = mc.get<std::size_t>();
  }
  return meta;
}

json detect_request(const std::string& id, const Probe& probe) {
  json req = {{"type", "detect"}, {"id", id}};
  if (probe.image_path) {
    req["image_path"] = std::filesystem::absolute(*probe.image_path).string();
  } else {
    if (!probe.image) throw ContractError("probe carries neither a path nor an image");
    req["image_png_b64"] = base64_encode(encode_png(*probe.image));
  }
  return req;
}

namespace {

Detection parse_item(const json& item) {
  if (!item.is_object()) throw ProtocolError("detection item is not an object");
  Detection d;
  if (!item.contains("class") || !item["class"].is_string()) {
    throw ProtocolError("detection item without a class");
  }
  d.class_label = item["class"].get<std::string>();
  if (d.class_label.empty()) throw ProtocolError("detection item with an empty class");

  if (!item.contains("bbox") || !item["bbox"].is_array() || item["bbox"].size() != 4) {
    throw ProtocolError("detection bbox must be [x, y, w, h]");
  }
  for (const auto& v : item["bbox"]) {
    if (!v.is_number()) throw ProtocolError("detection bbox holds a non-number");
  }
  d.box = {item["bbox"][0].get<double>(), item["bbox"][1].get<double>(),
           item["bbox"][2].get<double>(), item["bbox"][3].get<double>()};
  if (!d.box.valid()) throw ProtocolError("detection bbox has non-positive size");

  if (!item.contains("confidence") || !item["confidence"].is_number()) {
    throw ProtocolError("detection item without a confidence");
  }
  d.confidence = item["confidence"].get<double>();
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw ProtocolError("detection confidence outside [0, 1]");
  }
  return d;
}

}  // namespace

DetectionSet parse_detect_response(const json& msg, const std::string& id,
                                   double strength) {
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    throw ProtocolError("response without a type");
  }
  if (msg.value("id", json()) != json(id)) {
    throw ProtocolError("response id does not match request " + id);
  }
  const auto type = msg["type"].get<std::string>();
  if (type == "error") {
    throw ProbeError("detector error: " + msg.value("message", std::string("(no message)")),
                     strength);
  }
  if (type != "detections") throw ProtocolError("unexpected response type " + type);
  if (!msg.contains("items") || !msg["items"].is_array()) {
    throw ProtocolError("detections response without an items array");
  }
  DetectionSet out;
  out.reserve(msg["items"].size());
  for (const auto& item : msg["items"]) out.push_back(parse_item(item));
  return out;
}

json detections_response(const std::string& id, const DetectionSet& items) {
  json arr = json::array();
  for (const auto& d : items) {
    arr.push_back({{"class", d.class_label},
                   {"bbox", {d.box.x, d.box.y, d.box.w, d.box.h}},
                   {"confidence", d.confidence}});
  }
  return {{"type", "detections"}, {"id", id}, {"items", std::move(arr)}};
}

json error_response(const std::string& id, const std::string& message) {
  return {{"type", "error"}, {"id", id}, {"message", message}};
}

json parse_line(const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
}

}  // namespace affc::protocol
