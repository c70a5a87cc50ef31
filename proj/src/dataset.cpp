#include "ktl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ktl/error.hpp"

namespace ktl {

LabeledDataset::LabeledDataset(std::vector<double> values, std::size_t dim,
                               std::vector<std::int32_t> labels, std::size_t num_classes)
    : values_(std::move(values)), dim_(dim), labels_(std::move(labels)), num_classes_(num_classes) {
  if (dim_ == 0) throw ValidationError("dataset dimension must be >= 1");
  if (values_.size() != labels_.size() * dim_) {
    throw ValidationError("dataset has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(labels_.size()) + " rows of dimension " +
                          std::to_string(dim_));
  }
  std::int32_t max_label = -1;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0) {
      throw ValidationError("row " + std::to_string(i) + ": negative label " + std::to_string(labels_[i]));
    }
    max_label = std::max(max_label, labels_[i]);
    for (std::size_t k = 0; k < dim_; ++k) {
      if (!std::isfinite(values_[i * dim_ + k])) {
        throw ValidationError("row " + std::to_string(i) + ": non-finite value in column " +
                              std::to_string(k));
      }
    }
  }
  if (num_classes_ == 0) {
    num_classes_ = static_cast<std::size_t>(max_label + 1);
  } else if (max_label >= 0 && static_cast<std::size_t>(max_label) >= num_classes_) {
    auto it = std::find_if(labels_.begin(), labels_.end(), [&](std::int32_t l) {
      return static_cast<std::size_t>(l) >= num_classes_;
    });
    throw ValidationError("row " + std::to_string(it - labels_.begin()) + ": label " +
                          std::to_string(*it) + " outside [0, " + std::to_string(num_classes_) + ")");
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> v;
  v.reserve(rows.size() * dim_);
  std::vector<std::int32_t> l;
  l.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) throw ValidationError("subset row " + std::to_string(r) + " out of range");
    const auto p = point(r);
    v.insert(v.end(), p.begin(), p.end());
    l.push_back(labels_[r]);
  }
  return LabeledDataset(std::move(v), dim_, std::move(l), num_classes_);
}

std::vector<double> LabeledDataset::label_frequencies() const {
  std::vector<double> f(num_classes_, 0.0);
  for (auto l : labels_) f[static_cast<std::size_t>(l)] += 1.0;
  for (auto& v : f) v /= static_cast<double>(std::max<std::size_t>(size(), 1));
  return f;
}

}  // namespace ktl
