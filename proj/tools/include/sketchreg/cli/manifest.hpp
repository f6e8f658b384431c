#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sketchreg::cli {

struct InputDigest {
  std::string path;
  std::optional<std::uint64_t> fnv1a64;  // absent for stdin
  std::uint64_t bytes = 0;
};

/// Written next to every output as <output>.manifest.json.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::string>> flags;
  std::uint64_t seed = 0;
  std::vector<InputDigest> inputs;
  double read_ms = 0.0;
  double sketch_ms = 0.0;
  double solve_ms = 0.0;
  std::vector<std::string> outputs;

  std::string to_json() const;
};

/// 64-bit FNV-1a of a file's bytes.
InputDigest digest_file(const std::filesystem::path& path);

/// "-" writes to stderr.
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace sketchreg::cli
