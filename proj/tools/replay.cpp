// gaitkit-replay: send a canonical keypoint file to a running `gaitkit stream`.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/stream.hpp"

using namespace gaitkit;

int main(int argc, char** argv) {
  CLI::App app{"Replay a keypoint stream over UDP or TCP"};
  std::string path;
  std::string target = "127.0.0.1:9870";
  ReplayOptions options;
  app.add_option("file", path, "Canonical keypoint JSON")->required();
  app.add_option("--target", target, "HOST:PORT");
  app.add_option("--transport", options.transport)->check(CLI::IsMember({"udp", "tcp"}));
  app.add_option("--fps", options.fps, "Send rate; 0 for unpaced");
  app.add_option("--drop", options.drop_fraction, "Fraction of frames to withhold");
  app.add_option("--seed", options.seed, "Seed for drop selection");
  CLI11_PARSE(app, argc, argv);

  try {
    options.target = Endpoint::parse(target);
    const ReplayResult r = replay(read_file(path), options);
    nlohmann::ordered_json j{{"sent", r.sent}, {"dropped", r.dropped}};
    std::cout << j.dump() << std::endl;
  } catch (const Error& e) {
    nlohmann::ordered_json j{{"error", {{"category", to_string(e.code())}, {"message", e.what()}}}};
    std::cerr << j.dump() << std::endl;
    return exit_code(e.code());
  }
  return 0;
}
