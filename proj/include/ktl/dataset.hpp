#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ktl {

// n real vectors of a fixed dimension with class labels in [0, C).
class LabeledDataset {
 public:
  LabeledDataset() = default;
  // `values` is row-major n x dim. num_classes = 0 infers max label + 1.
  // Throws ValidationError naming the offending row on non-finite values or
  // labels outside [0, C).
  LabeledDataset(std::vector<double> values, std::size_t dim, std::vector<std::int32_t> labels,
                 std::size_t num_classes = 0);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dim() const { return dim_; }
  std::size_t num_classes() const { return num_classes_; }

  std::span<const double> point(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::int32_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::int32_t>& labels() const { return labels_; }

  LabeledDataset subset(std::span<const std::size_t> rows) const;
  // Fraction of each label.
  std::vector<double> label_frequencies() const;

  bool operator==(const LabeledDataset&) const = default;

 private:
  std::vector<double> values_;
  std::size_t dim_ = 0;
  std::vector<std::int32_t> labels_;
  std::size_t num_classes_ = 0;
};

}  // namespace ktl
