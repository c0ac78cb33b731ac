#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "pcdn/noise.hpp"
#include "pcdn/training.hpp"
#include "pcdn/tvpc.hpp"

namespace pcdn {

inline constexpr const char* kToolVersion = "pcdn 0.3.0";

// Flat "key=value" text with a versioned first line "# pcdn <kind> v<version>".
// Keys are written sorted, so output is byte-stable.
struct KeyValueDocument {
  std::string kind;
  int version = 1;
  std::map<std::string, std::string> entries;

  void merge(const std::map<std::string, std::string>& kv);
  const std::string& at(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
  static KeyValueDocument read(std::istream& in);
  static KeyValueDocument read(const std::filesystem::path& path);

  friend bool operator==(const KeyValueDocument&, const KeyValueDocument&) = default;
};

// Everything needed to re-run a command.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> inputs;   // role -> path
  std::map<std::string, std::string> outputs;  // role -> path
  std::optional<NoiseSpec> noise;
  std::optional<TrainConfig> train;
  std::optional<std::string> weights_path;
  std::optional<double> sigma_abs;
  std::optional<double> kernel_variance;
  std::optional<double> kde_bandwidth;
  std::optional<TvpcConfig> tvpc;
  std::map<std::string, std::string> extra;    // free-form run parameters
  std::string tool_version = kToolVersion;

  KeyValueDocument to_document() const;
  static RunManifest from_document(const KeyValueDocument& doc);

  friend bool operator==(const RunManifest& a, const RunManifest& b) {
    return a.to_document() == b.to_document();
  }
};

// Weights sidecar: the TrainConfig and the feature scale used in training.
struct WeightsHeader {
  TrainConfig config;
  double feature_scale = 1.0;

  KeyValueDocument to_document() const;
  static WeightsHeader from_document(const KeyValueDocument& doc);
};

// "<weights path>.cfg"
std::filesystem::path weights_header_path(const std::filesystem::path& weights);

}  // namespace pcdn
