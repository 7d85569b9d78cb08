#include "dcim/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dcim/errors.hpp"

namespace dcim {

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32_be(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }
  std::uint32_t u32_le(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  double f64_le(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      throw ParseError(std::string("truncated ") + what + ": expected " + std::to_string(n) + " bytes, got " +
                           std::to_string(remaining()),
                       pos_);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64_le(std::vector<std::uint8_t>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::size_t checked_mul(std::size_t a, std::size_t b, std::size_t offset) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    throw ParseError("IDX dimension product overflows", offset);
  return a * b;
}

std::string magic_hex(std::uint32_t m) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", m);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ResourceError("write failed: " + path.string());
}

ImageTensor parse_idx_images(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint32_t magic = r.u32_be("IDX header");
  if (magic != kIdxImageMagic)
    throw ParseError("bad IDX image magic " + magic_hex(magic) + ", expected " + magic_hex(kIdxImageMagic), 0);
  const std::size_t count = r.u32_be("IDX dimensions");
  const std::size_t rows = r.u32_be("IDX dimensions");
  const std::size_t cols = r.u32_be("IDX dimensions");
  const std::size_t header_end = r.offset();
  const std::size_t per_image = checked_mul(rows, cols, header_end);
  const std::size_t total = checked_mul(count, per_image, header_end);
  if (r.remaining() != total)
    throw ParseError("IDX image payload: expected " + std::to_string(total) + " bytes, got " +
                         std::to_string(r.remaining()),
                     header_end);
  ImageTensor t{rows, cols, {}};
  t.images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto px = r.take(per_image, "IDX image payload");
    Vector v(per_image);
    for (std::size_t j = 0; j < per_image; ++j) v[j] = px[j] / 255.0;
    t.images.push_back(std::move(v));
  }
  return t;
}

std::vector<std::size_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint32_t magic = r.u32_be("IDX header");
  if (magic != kIdxLabelMagic)
    throw ParseError("bad IDX label magic " + magic_hex(magic) + ", expected " + magic_hex(kIdxLabelMagic), 0);
  const std::size_t count = r.u32_be("IDX dimensions");
  if (r.remaining() != count)
    throw ParseError("IDX label payload: expected " + std::to_string(count) + " bytes, got " +
                         std::to_string(r.remaining()),
                     r.offset());
  const auto payload = r.take(count, "IDX label payload");
  return {payload.begin(), payload.end()};
}

ImageTensor read_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_idx_images(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::size_t> read_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_idx_labels(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

Dataset load_mnist(const std::filesystem::path& dir, MnistSplit split) {
  const std::string prefix = split == MnistSplit::Train ? "train" : "t10k";
  const auto images_path = dir / (prefix + "-images-idx3-ubyte");
  const auto labels_path = dir / (prefix + "-labels-idx1-ubyte");
  for (const auto& p : {images_path, labels_path})
    if (!std::filesystem::is_regular_file(p)) throw ResourceError("missing MNIST file " + p.string());
  ImageTensor images = read_idx_images(images_path);
  std::vector<std::size_t> labels = read_idx_labels(labels_path);
  if (images.images.size() != labels.size())
    throw ResourceError("MNIST " + prefix + ": " + std::to_string(images.images.size()) + " images but " +
                        std::to_string(labels.size()) + " labels");
  Dataset ds{std::move(images.images), std::move(labels), 10};
  ds.validate();
  return ds;
}

Dataset synthetic_bars(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw std::invalid_argument("synthetic_bars: n must be positive");
  constexpr std::size_t kSide = 4;
  Rng rng(seed);
  Dataset ds;
  ds.class_count = 8;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = rng.below(8);
    Vector img(kSide * kSide);
    for (std::size_t r = 0; r < kSide; ++r)
      for (std::size_t c = 0; c < kSide; ++c) {
        const bool bar = cls < 4 ? r == cls : c == cls - 4;
        const double noise = 0.1 * rng.uniform();
        img[r * kSide + c] = bar ? 1.0 - noise : noise;
      }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(cls);
  }
  return ds;
}

std::vector<std::uint8_t> encode_checkpoint(const Params& p, std::optional<Objective> objective) {
  const auto& spec = p.spec();
  std::vector<std::uint8_t> out = {'D', 'C', 'I', 'M'};
  put_u32_le(out, kCheckpointVersion);
  put_u32_le(out, static_cast<std::uint32_t>(spec.depth()));
  for (const auto& l : spec.layers) {
    put_u32_le(out, static_cast<std::uint32_t>(l.in_dim));
    put_u32_le(out, static_cast<std::uint32_t>(l.out_dim));
    put_u32_le(out, static_cast<std::uint32_t>(l.activation));
  }
  put_u32_le(out, static_cast<std::uint32_t>(spec.encoding));
  std::uint32_t flags = p.tie_interior_biases() ? kFlagTieInteriorBiases : 0u;
  if (objective) flags |= (static_cast<std::uint32_t>(*objective) + 1u) << 4;
  put_u32_le(out, flags);
  for (const auto& l : p.layers()) {
    for (double v : l.weight.span()) put_f64_le(out, v);
    for (double v : l.forward_bias) put_f64_le(out, v);
    for (double v : l.backward_bias) put_f64_le(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "checkpoint magic");
  if (!(magic[0] == 'D' && magic[1] == 'C' && magic[2] == 'I' && magic[3] == 'M'))
    throw ParseError("bad magic: not a DCIM checkpoint", 0);
  const std::uint32_t version = r.u32_le("checkpoint version");
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version) + " (reader supports " +
                         std::to_string(kCheckpointVersion) + ")",
                     4);
  const std::uint32_t depth = r.u32_le("checkpoint layer count");
  if (depth == 0 || depth > 1024) throw ParseError("implausible layer count " + std::to_string(depth), 8);
  NetworkSpec spec;
  for (std::uint32_t k = 0; k < depth; ++k) {
    LayerSpec l;
    l.in_dim = r.u32_le("checkpoint layer spec");
    l.out_dim = r.u32_le("checkpoint layer spec");
    const std::uint32_t act = r.u32_le("checkpoint layer spec");
    if (act > 2) throw ParseError("unknown activation code " + std::to_string(act), r.offset() - 4);
    l.activation = static_cast<Activation>(act);
    spec.layers.push_back(l);
  }
  const std::uint32_t enc = r.u32_le("checkpoint encoding");
  if (enc > 1) throw ParseError("unknown encoding code " + std::to_string(enc), r.offset() - 4);
  spec.encoding = static_cast<Encoding>(enc);
  const std::uint32_t flags = r.u32_le("checkpoint flags");
  const std::size_t spec_end = r.offset();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("shape mismatch: ") + e.what(), spec_end);
  }
  std::size_t expected = 0;
  for (const auto& l : spec.layers) expected += 8 * (l.in_dim * l.out_dim + l.out_dim + l.in_dim);
  if (r.remaining() != expected)
    throw ParseError("shape mismatch: parameter payload expected " + std::to_string(expected) + " bytes, got " +
                         std::to_string(r.remaining()),
                     spec_end);
  std::vector<LayerParams> layers;
  for (const auto& l : spec.layers) {
    LayerParams lp{Matrix(l.out_dim, l.in_dim), Vector(l.out_dim), Vector(l.in_dim)};
    for (double& v : lp.weight.span()) v = r.f64_le("weights");
    for (double& v : lp.forward_bias) v = r.f64_le("forward bias");
    for (double& v : lp.backward_bias) v = r.f64_le("backward bias");
    layers.push_back(std::move(lp));
  }
  const bool tied = (flags & kFlagTieInteriorBiases) != 0;
  Checkpoint ck{Params(std::move(spec), std::move(layers), tied), std::nullopt};
  const std::uint32_t obj = (flags >> 4) & 0xF;
  if (obj >= 1 && obj <= 3) ck.objective = static_cast<Objective>(obj - 1);
  return ck;
}

void save_checkpoint(const Params& p, const std::filesystem::path& path, std::optional<Objective> objective) {
  write_file(path, encode_checkpoint(p, objective));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_pgm(const Vector& image, std::size_t width, std::size_t height) {
  if (image.size() != width * height)
    throw std::invalid_argument("write_pgm: image has " + std::to_string(image.size()) + " values, expected " +
                                std::to_string(width * height));
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : image) {
    const double scaled = std::floor(v * 255.0 + 0.5);
    out.push_back(static_cast<std::uint8_t>(std::isnan(scaled) ? 0.0 : std::clamp(scaled, 0.0, 255.0)));
  }
  return out;
}

void write_pgm(const Vector& image, std::size_t width, std::size_t height, const std::filesystem::path& path) {
  write_file(path, encode_pgm(image, width, height));
}

std::string format_metrics_csv(const std::vector<EpochMetrics>& metrics) {
  std::string out = "epoch,split,forward_nll,reverse_nll_mean,reverse_nll_sum,accuracy\n";
  char buf[256];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.6g,%.6g,%.6g,%.6g\n", m.epoch, m.split.c_str(), m.forward_nll,
                  m.reverse_nll_mean, m.reverse_nll_sum, m.accuracy);
    out += buf;
  }
  return out;
}

std::vector<EpochMetrics> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,split,forward_nll,reverse_nll_mean,reverse_nll_sum,accuracy")
    throw std::runtime_error("metrics csv: bad header");
  std::vector<EpochMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(row, field, ',')) f.push_back(field);
    if (f.size() != 6) throw std::runtime_error("metrics csv: expected 6 fields in '" + line + "'");
    out.push_back({std::stoul(f[0]), f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])});
  }
  return out;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path) {
  const std::string text = format_metrics_csv(metrics);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dcim
