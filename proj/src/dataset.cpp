#include "laeids/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "laeids/rng.hpp"

namespace laeids {

void LabeledMatrix::push_row(std::span<const double> x, int label) {
  if (rows == 0 && cols == 0) cols = x.size();
  if (x.size() != cols) throw LengthMismatch("row width does not match matrix");
  values.insert(values.end(), x.begin(), x.end());
  labels.push_back(label);
  ++rows;
  if (label >= num_classes) num_classes = label + 1;
}

void apply_mask(LabeledMatrix& m, std::span<const uint8_t> mask) {
  if (mask.size() != m.cols) throw LengthMismatch("mask width does not match matrix");
  for (size_t r = 0; r < m.rows; ++r) {
    double* row = m.values.data() + r * m.cols;
    for (size_t c = 0; c < m.cols; ++c) {
      if (!mask[c]) row[c] = 0.0;
    }
  }
}

std::vector<double> apply_mask(std::span<const double> x, std::span<const uint8_t> mask) {
  if (mask.size() != x.size()) throw LengthMismatch("mask width does not match vector");
  std::vector<double> out(x.begin(), x.end());
  for (size_t c = 0; c < out.size(); ++c) {
    if (!mask[c]) out[c] = 0.0;
  }
  return out;
}

namespace {
std::map<int, std::vector<size_t>> by_class(std::span<const int> labels) {
  std::map<int, std::vector<size_t>> groups;
  for (size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
}
}  // namespace

SplitIndices stratified_split(std::span<const int> labels, double second_fraction, uint64_t seed) {
  if (second_fraction < 0.0 || second_fraction > 1.0) {
    throw InvalidRange("split fraction must be in [0, 1]");
  }
  SplitIndices out;
  Rng rng(derive_seed(seed, 0x53504C49ull));  // "SPLI"
  for (auto& [cls, idx] : by_class(labels)) {
    auto shuffled = idx;
    shuffle_indices(shuffled, rng);
    size_t take = static_cast<size_t>(std::llround(second_fraction * static_cast<double>(shuffled.size())));
    if (second_fraction > 0.0 && !shuffled.empty()) take = std::max<size_t>(take, 1);
    take = std::min(take, shuffled.size());
    out.second.insert(out.second.end(), shuffled.begin(), shuffled.begin() + static_cast<ptrdiff_t>(take));
    out.first.insert(out.first.end(), shuffled.begin() + static_cast<ptrdiff_t>(take), shuffled.end());
  }
  std::sort(out.first.begin(), out.first.end());
  std::sort(out.second.begin(), out.second.end());
  return out;
}

std::vector<size_t> stratified_sample(std::span<const int> labels, double fraction, uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) throw InvalidRange("sample fraction must be in (0, 1]");
  std::vector<size_t> out;
  Rng rng(derive_seed(seed, 0x53414D50ull));  // "SAMP"
  for (auto& [cls, idx] : by_class(labels)) {
    auto shuffled = idx;
    shuffle_indices(shuffled, rng);
    size_t take = static_cast<size_t>(std::llround(fraction * static_cast<double>(shuffled.size())));
    take = std::clamp<size_t>(take, 1, shuffled.size());
    out.insert(out.end(), shuffled.begin(), shuffled.begin() + static_cast<ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

LabeledMatrix take_rows(const LabeledMatrix& m, std::span<const size_t> idx) {
  LabeledMatrix out;
  out.cols = m.cols;
  out.num_classes = m.num_classes;
  out.class_names = m.class_names;
  out.values.reserve(idx.size() * m.cols);
  out.labels.reserve(idx.size());
  for (size_t i : idx) {
    auto r = m.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.labels.push_back(m.labels[i]);
    ++out.rows;
  }
  return out;
}

}  // namespace laeids
