#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace smdcard {

// Grayscale raster. Samples are stored as doubles; `peak` is the container
// maximum (255 for 8-bit, 65535 for 16-bit).
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  double peak = 255.0;
  std::vector<double> pixels;  // row-major

  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

// Reads a portable graymap (P2 or P5). maxval <= 255 is an 8-bit container,
// anything larger a 16-bit one.
GrayImage read_pgm(const std::filesystem::path& path);

// Writes binary P5 with maxval equal to the image peak.
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

struct ImagePair {
  std::filesystem::path real;
  std::filesystem::path synthetic;
};

// Two-column delimiter-separated manifest (header row "real,synthetic").
// Relative paths resolve against the manifest's directory.
std::vector<ImagePair> read_image_manifest(const std::filesystem::path& path);

}  // namespace smdcard
