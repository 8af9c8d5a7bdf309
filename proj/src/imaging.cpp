#include "laeids/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "laeids/binio.hpp"

namespace laeids::imaging {

std::string to_string(ImageSource s) {
  return s == ImageSource::kPayloadBytes ? "payload" : "tabular";
}

ImageSource image_source_from_string(std::string_view s) {
  if (s == "payload") return ImageSource::kPayloadBytes;
  if (s == "tabular") return ImageSource::kTabularQuantized;
  throw InvalidRange("unknown image source: " + std::string(s));
}

void ImageConfig::validate() const {
  if (height < 2 || width < 2) throw InvalidRange("image dimensions must be at least 2x2");
}

double FeatureScaler::scale(size_t feature, double value) const {
  const double lo = mins[feature];
  const double hi = maxs[feature];
  const double t = (value - lo) / (hi - lo);
  return std::clamp(t, 0.0, 1.0);
}

FeatureScaler fit_scaler(std::span<const ingest::FlowSession> training_sessions) {
  size_t width = 0;
  for (const auto& s : training_sessions) width = std::max(width, s.tabular_features.size());
  if (width == 0) throw EmptyInput("no tabular features to fit");

  FeatureScaler scaler;
  scaler.mins.assign(width, std::numeric_limits<double>::infinity());
  scaler.maxs.assign(width, -std::numeric_limits<double>::infinity());
  bool any = false;
  for (const auto& s : training_sessions) {
    if (s.tabular_features.empty()) continue;
    any = true;
    for (size_t i = 0; i < s.tabular_features.size(); ++i) {
      const double v = s.tabular_features[i];
      if (!std::isfinite(v)) throw NonFiniteFeature("non-finite feature in session " + s.session_id);
      scaler.mins[i] = std::min(scaler.mins[i], v);
      scaler.maxs[i] = std::max(scaler.maxs[i], v);
    }
  }
  if (!any) throw EmptyInput("no tabular features to fit");
  for (size_t i = 0; i < width; ++i) {
    if (!(scaler.maxs[i] > scaler.mins[i])) scaler.maxs[i] = scaler.mins[i] + 1.0;
  }
  return scaler;
}

TrafficImage session_to_image(const ingest::FlowSession& session, const ImageConfig& cfg,
                              const FeatureScaler* scaler) {
  cfg.validate();
  TrafficImage img;
  img.height = cfg.height;
  img.width = cfg.width;
  img.source_session_id = session.session_id;
  const size_t budget = static_cast<size_t>(cfg.pixel_count());
  img.pixels.assign(budget, 0.0);

  if (cfg.source == ImageSource::kPayloadBytes) {
    if (session.payload.empty()) {
      throw EmptySource("session " + session.session_id + " has no payload bytes");
    }
    const size_t n = std::min(budget, session.payload.size());
    for (size_t i = 0; i < n; ++i) img.pixels[i] = session.payload[i] / 255.0;
  } else {
    if (session.tabular_features.empty()) {
      throw EmptySource("session " + session.session_id + " has no tabular features");
    }
    if (scaler == nullptr) throw std::invalid_argument("tabular imaging requires a fitted scaler");
    const size_t n = std::min({budget, session.tabular_features.size(), scaler->mins.size()});
    for (size_t i = 0; i < n; ++i) {
      const double v = session.tabular_features[i];
      if (!std::isfinite(v)) throw NonFiniteFeature("non-finite feature in session " + session.session_id);
      img.pixels[i] = scaler->scale(i, v);
    }
  }
  return img;
}

void write_image(std::ostream& out, const TrafficImage& img) {
  BinaryWriter w(out);
  out.write("TIMG", 4);
  w.u32(static_cast<uint32_t>(img.height));
  w.u32(static_cast<uint32_t>(img.width));
  w.u32(0);  // reserved
  for (double p : img.pixels) w.f32(static_cast<float>(p));
}

TrafficImage read_image(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TIMG", 4) != 0) throw CorruptFile("not a traffic image file");
  BinaryReader r(in);
  TrafficImage img;
  img.height = static_cast<int>(r.u32());
  img.width = static_cast<int>(r.u32());
  r.u32();  // reserved
  const size_t n = static_cast<size_t>(img.height) * static_cast<size_t>(img.width);
  img.pixels.resize(n);
  for (size_t i = 0; i < n; ++i) img.pixels[i] = r.f32();
  return img;
}

}  // namespace laeids::imaging
