#include "sketchreg/cli/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

#include <json.hpp>

#include "sketchreg/error.hpp"

namespace sketchreg::cli {

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["argv"] = argv;
  nlohmann::ordered_json f = nlohmann::ordered_json::object();
  for (const auto& [name, value] : flags) f[name] = value;
  j["flags"] = f;
  j["seed"] = seed;
  nlohmann::ordered_json in = nlohmann::ordered_json::array();
  for (const InputDigest& d : inputs) {
    nlohmann::ordered_json e;
    e["path"] = d.path;
    if (d.fnv1a64) {
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(*d.fnv1a64));
      e["fnv1a64"] = hex;
    } else {
      e["fnv1a64"] = nullptr;
    }
    e["bytes"] = d.bytes;
    in.push_back(e);
  }
  j["inputs"] = in;
  j["timings_ms"] = {{"read", read_ms}, {"sketch", sketch_ms}, {"solve", solve_ms}};
  j["outputs"] = outputs;
  return j.dump(2);
}

InputDigest digest_file(const std::filesystem::path& path) {
  InputDigest d;
  d.path = path.string();
  if (path == "-") return d;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    d.bytes += got;
  }
  d.fnv1a64 = h;
  return d;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  const std::string text = manifest.to_json() + "\n";
  if (path == "-") {
    std::cerr << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  if (output == "-") return "-";
  return std::filesystem::path(output.string() + ".manifest.json");
}

}  // namespace sketchreg::cli
