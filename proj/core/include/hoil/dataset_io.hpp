#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoil/approx.hpp"
#include "hoil/data.hpp"

namespace hoil {

/// Malformed container. line() is set for header problems, offset() (bytes
/// from the start of the file) for record problems; the other is -1.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line, long offset);
  long line() const { return line_; }
  long offset() const { return offset_; }

 private:
  long line_;
  long offset_;
};

struct DatasetHeader {
  std::string env_id;
  int obs_dim_e = 0;
  int obs_dim_l = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::string kind;  // e.g. "demos", "evolving"
  bool operator==(const DatasetHeader&) const = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Trajectory> trajectories;
  bool operator==(const Dataset&) const = default;
};

/// Text header followed by length-prefixed little-endian binary records.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

std::string serialize_dataset(const Dataset& dataset);
Dataset parse_dataset(const std::string& bytes);

/// Approximator checkpoint in the same container; kind is "model:<tag>".
void save_model(const std::filesystem::path& path, const Approximator& f, const std::string& tag);
Approximator load_model(const std::filesystem::path& path, std::string* tag = nullptr);

}  // namespace hoil
