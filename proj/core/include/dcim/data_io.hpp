#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcim/dataset.hpp"
#include "dcim/network.hpp"
#include "dcim/objectives.hpp"
#include "dcim/train.hpp"

namespace dcim {

// IDX container (big-endian). Parse failures throw ParseError.

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

struct ImageTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Vector> images;  // row-major, pixels / 255
};

ImageTensor parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::size_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
ImageTensor read_idx_images(const std::filesystem::path& path);
std::vector<std::size_t> read_idx_labels(const std::filesystem::path& path);

enum class MnistSplit { Train, Test };

/// Loads one split from a directory holding the four standard MNIST files.
Dataset load_mnist(const std::filesystem::path& dir, MnistSplit split);

/// 4x4 images, 8 classes: classes 0-3 light row c, classes 4-7 light column
/// c-4. Bar pixels are 1 - u/10, the rest u/10, u uniform in [0,1).
Dataset synthetic_bars(std::uint64_t seed, std::size_t n);

// Checkpoint layout, all integers little-endian:
//   "DCIM" | u32 version=1 | u32 layer count
//   | per layer: u32 in_dim, u32 out_dim, u32 activation
//   | u32 encoding | u32 flags
//   | per layer: W row-major, b, a as f64
// Flags: bit 0 = tied interior biases; bits 4-7 = training objective + 1.

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kFlagTieInteriorBiases = 1u << 0;

struct Checkpoint {
  Params params;
  std::optional<Objective> objective;
};

std::vector<std::uint8_t> encode_checkpoint(const Params& p, std::optional<Objective> objective = {});
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Params& p, const std::filesystem::path& path, std::optional<Objective> objective = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255); byte = floor(v * 255 + 0.5) clamped.
std::vector<std::uint8_t> encode_pgm(const Vector& image, std::size_t width, std::size_t height);
void write_pgm(const Vector& image, std::size_t width, std::size_t height, const std::filesystem::path& path);

/// Header `epoch,split,forward_nll,reverse_nll_mean,reverse_nll_sum,accuracy`,
/// values with 6 significant digits.
std::string format_metrics_csv(const std::vector<EpochMetrics>& metrics);
std::vector<EpochMetrics> parse_metrics_csv(const std::string& text);
void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace dcim
