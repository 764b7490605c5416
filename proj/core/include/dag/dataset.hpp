#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dag/image.hpp"
#include "dag/synth.hpp"

namespace dag {

/// Binary 8-bit greymap ("P5", maxval 255). Pixels are rounded to k/255.
void write_pgm(const std::filesystem::path& path, const Image& image);
Image read_pgm(const std::filesystem::path& path);

struct Dataset {
  std::string split;
  std::uint64_t dataset_seed = 0;
  SynthParams params;
  std::vector<SampleRecord> records;
};

/// Writes `dir/images/NNNNN.pgm` and `dir/manifest.json`.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
/// Throws ParseError (file + byte offset) on malformed images or manifest.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace dag
