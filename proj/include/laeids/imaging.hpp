#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "laeids/errors.hpp"
#include "laeids/ingest.hpp"

namespace laeids::imaging {

struct EmptySource : Error {
  using Error::Error;
};

enum class ImageSource { kPayloadBytes, kTabularQuantized };

std::string to_string(ImageSource s);
ImageSource image_source_from_string(std::string_view s);

struct ImageConfig {
  int height = 32;
  int width = 32;
  ImageSource source = ImageSource::kPayloadBytes;

  int pixel_count() const { return height * width; }
  void validate() const;
};

// Fixed-size grayscale grid; every pixel lives in [0, 1].
struct TrafficImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major, height * width entries
  std::string source_session_id;
};

// Per-feature (min, max) statistics fitted on the training split only.
// Constant features are widened to (min, min + 1) so scaling never divides
// by zero; evaluation values outside the range clamp to [0, 1].
struct FeatureScaler {
  std::vector<double> mins;
  std::vector<double> maxs;

  double scale(size_t feature, double value) const;
};

FeatureScaler fit_scaler(std::span<const ingest::FlowSession> training_sessions);

// PAYLOAD_BYTES: first height*width payload bytes, zero padded, byte/255.
// TABULAR_QUANTIZED: features min-max scaled with `scaler`, row-major,
// zero padded. The scaler argument is required in tabular mode.
TrafficImage session_to_image(const ingest::FlowSession& session, const ImageConfig& cfg,
                              const FeatureScaler* scaler = nullptr);

// Cache format: 16-byte header (magic "TIMG", u32 height, u32 width,
// u32 reserved) followed by height*width little-endian 32-bit floats.
void write_image(std::ostream& out, const TrafficImage& img);
TrafficImage read_image(std::istream& in);

}  // namespace laeids::imaging
