#pragma once

// Dataset file formats.
//
// CSV: one row per point, first column an integer label, remaining columns
// real features. A header line is optional and detected by a non-integer
// first field.
//
// KTL1 binary (little endian):
//   "KTL1" | u32 n | u32 d | u32 C | n*d f64 features (row-major) | n i32 labels

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ktl/dataset.hpp"

namespace ktl {

enum class DatasetFormat { kAuto, kCsv, kBinary };

LabeledDataset read_csv(std::istream& in, const std::string& source = "<stream>");
void write_csv(std::ostream& out, const LabeledDataset& data);

LabeledDataset read_binary(std::istream& in, const std::string& source = "<stream>");
void write_binary(std::ostream& out, const LabeledDataset& data);

// kAuto picks binary when the file starts with the KTL1 magic.
LabeledDataset read_dataset(const std::filesystem::path& path,
                            DatasetFormat format = DatasetFormat::kAuto);
void write_dataset(const std::filesystem::path& path, const LabeledDataset& data,
                   DatasetFormat format);

DatasetFormat parse_format(const std::string& name);

}  // namespace ktl
