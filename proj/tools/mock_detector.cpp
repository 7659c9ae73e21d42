// SPDX-License-Identifier: Apache-2.0
// Minimal detector speaking the line protocol on stdin/stdout. Detects one
// "car" iff the image's mean luminance lies in [lo, hi]. Fault switches let
// tests exercise the harness's error paths.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "affc/codec.hpp"
#include "affc/image.hpp"
#include "affc/protocol.hpp"

int main(int argc, char** argv) {
  CLI::App app{"affc mock detector"};
  double lo = 40.0;
  double hi = 220.0;
  int protocol = affc::kProtocolVersion;
  std::string name = "mock";
  bool omit_name = false;
  bool bad_box = false;
  bool wrong_id = false;
  long exit_after = -1;
  long hang_after = -1;
  app.add_option("--lo", lo);
  app.add_option("--hi", hi);
  app.add_option("--protocol", protocol);
  app.add_option("--name", name);
  app.add_flag("--omit-name", omit_name);
  app.add_flag("--bad-box", bad_box);
  app.add_flag("--wrong-id", wrong_id);
  app.add_option("--exit-after", exit_after, "Exit on the detect request after N answered");
  app.add_option("--hang-after", hang_after, "Stop answering after N detect requests");
  CLI11_PARSE(app, argc, argv);

  long answered = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(line);
    } catch (const std::exception&) {
      std::cout << affc::protocol::error_response("", "unparseable request").dump() << std::endl;
      continue;
    }
    const auto type = msg.value("type", "");
    if (type == "hello") {
      nlohmann::json ack = {{"type", "hello_ack"}, {"protocol", protocol}, {"max_concurrency", 1}};
      if (!omit_name) ack["name"] = name;
      std::cout << ack.dump() << std::endl;
      continue;
    }
    if (type != "detect") continue;
    const auto id = msg.value("id", "");
    if (exit_after >= 0 && answered >= exit_after) return 3;
    if (hang_after >= 0 && answered >= hang_after) {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    ++answered;

    affc::DetectionSet items;
    try {
      affc::ImageBuffer image =
          msg.contains("image_path")
              ? affc::read_image(msg["image_path"].get<std::string>())
              : affc::decode_image(affc::base64_decode(msg.at("image_png_b64").get<std::string>()));
      const double lum = image.mean_luminance();
      if (lum >= lo && lum <= hi) {
        const double w = static_cast<double>(image.width());
        const double h = static_cast<double>(image.height());
        items.push_back({"car", {w / 4, h / 4, w / 2, bad_box ? -h / 2 : h / 2}, 0.9});
      }
    } catch (const std::exception& e) {
      std::cout << affc::protocol::error_response(id, e.what()).dump() << std::endl;
      continue;
    }
    std::cout << affc::protocol::detections_response(wrong_id ? id + "x" : id, items).dump()
              << std::endl;
  }
  return 0;
}
