#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "laeids/errors.hpp"

namespace laeids {

// Row-major numeric matrix with integer class labels; the common currency
// between feature selection, classifier training and the evaluation harness.
struct LabeledMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> values;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> class_names;

  std::span<const double> row(size_t i) const {
    return std::span<const double>(values).subspan(i * cols, cols);
  }
  void push_row(std::span<const double> x, int label);
};

// Feature masks select by zeroing: de-selected columns are forced to zero so
// the vector dimensionality stays constant for every mask. For tree models a
// constant-zero column can never host a split, which makes zeroing equivalent
// to dropping the column while keeping one model shape valid for all masks.
void apply_mask(LabeledMatrix& m, std::span<const uint8_t> mask);
std::vector<double> apply_mask(std::span<const double> x, std::span<const uint8_t> mask);

// Deterministic stratified split: per class, a seeded shuffle assigns
// round(fraction * count) rows (at least one when the class is nonempty)
// to `second`, the rest to `first`.
struct SplitIndices {
  std::vector<size_t> first;
  std::vector<size_t> second;
};
SplitIndices stratified_split(std::span<const int> labels, double second_fraction, uint64_t seed);

// Deterministic stratified subsample of about fraction * rows, at least one
// row per class. Throws InvalidRange when fraction is outside (0, 1].
std::vector<size_t> stratified_sample(std::span<const int> labels, double fraction, uint64_t seed);

LabeledMatrix take_rows(const LabeledMatrix& m, std::span<const size_t> idx);

}  // namespace laeids
