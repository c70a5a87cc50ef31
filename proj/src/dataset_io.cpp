#include "ktl/dataset_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ktl/error.hpp"

namespace ktl {
namespace {

constexpr std::array<char, 4> kMagic = {'K', 'T', 'L', '1'};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_int(const std::string& s, std::int32_t& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  // strtod accepts nan/inf spellings, which are rejected later with a row index.
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> buf;
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in, const std::string& source, const char* what) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(T)> buf;
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw IngestionError(source + ": truncated file while reading " + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

LabeledDataset read_csv(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::vector<std::int32_t> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no);
    std::int32_t label = 0;
    if (!parse_int(fields[0], label)) {
      if (first_content) {
        first_content = false;
        continue;  // header
      }
      throw IngestionError(where + ": label '" + fields[0] + "' is not an integer");
    }
    first_content = false;
    if (fields.size() < 2) throw IngestionError(where + ": row has no feature columns");
    if (dim == 0) {
      dim = fields.size() - 1;
    } else if (fields.size() - 1 != dim) {
      throw IngestionError(where + ": row has " + std::to_string(fields.size() - 1) +
                           " features, expected " + std::to_string(dim));
    }
    if (label < 0) throw IngestionError(where + ": negative label " + std::to_string(label));
    const std::size_t row = labels.size();
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      if (!parse_real(fields[k], v)) {
        throw IngestionError(where + ": column " + std::to_string(k) + " value '" + fields[k] +
                             "' is not a number");
      }
      if (!std::isfinite(v)) {
        throw IngestionError(where + ": row " + std::to_string(row) + " has non-finite value in column " +
                             std::to_string(k));
      }
      values.push_back(v);
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw IngestionError(source + ": no data rows");
  return LabeledDataset(std::move(values), dim, std::move(labels));
}

void write_csv(std::ostream& out, const LabeledDataset& data) {
  std::ostringstream buf;
  buf.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < data.size(); ++i) {
    buf << data.label(i);
    for (double v : data.point(i)) buf << ',' << v;
    buf << '\n';
  }
  out << buf.str();
}

LabeledDataset read_binary(std::istream& in, const std::string& source) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IngestionError(source + ": missing KTL1 magic");
  }
  const auto n = get_le<std::uint32_t>(in, source, "n");
  const auto d = get_le<std::uint32_t>(in, source, "d");
  const auto c = get_le<std::uint32_t>(in, source, "C");
  if (d == 0) throw IngestionError(source + ": dimension must be >= 1");
  std::vector<double> values(static_cast<std::size_t>(n) * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = get_le<double>(in, source, "features");
    if (!std::isfinite(values[i])) {
      throw IngestionError(source + ": row " + std::to_string(i / d) + " has non-finite value in column " +
                           std::to_string(i % d));
    }
  }
  std::vector<std::int32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = get_le<std::int32_t>(in, source, "labels");
    if (labels[i] < 0 || static_cast<std::uint32_t>(labels[i]) >= c) {
      throw IngestionError(source + ": row " + std::to_string(i) + " label " + std::to_string(labels[i]) +
                           " outside [0, " + std::to_string(c) + ")");
    }
  }
  return LabeledDataset(std::move(values), d, std::move(labels), c);
}

void write_binary(std::ostream& out, const LabeledDataset& data) {
  out.write(kMagic.data(), kMagic.size());
  put_le(out, static_cast<std::uint32_t>(data.size()));
  put_le(out, static_cast<std::uint32_t>(data.dim()));
  put_le(out, static_cast<std::uint32_t>(data.num_classes()));
  for (double v : data.values()) put_le(out, v);
  for (auto l : data.labels()) put_le(out, l);
}

LabeledDataset read_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string() + ": cannot open file");
  if (format == DatasetFormat::kAuto) {
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    format = (in.gcount() == 4 && head == kMagic) ? DatasetFormat::kBinary : DatasetFormat::kCsv;
    in.clear();
    in.seekg(0);
  }
  try {
    return format == DatasetFormat::kBinary ? read_binary(in, path.string()) : read_csv(in, path.string());
  } catch (const IngestionError&) {
    throw;
  } catch (const ValidationError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

void write_dataset(const std::filesystem::path& path, const LabeledDataset& data,
                   DatasetFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError(path.string() + ": cannot open file for writing");
  if (format == DatasetFormat::kBinary) {
    write_binary(out, data);
  } else {
    write_csv(out, data);
  }
}

DatasetFormat parse_format(const std::string& name) {
  if (name == "auto") return DatasetFormat::kAuto;
  if (name == "csv") return DatasetFormat::kCsv;
  if (name == "binary" || name == "ktl1") return DatasetFormat::kBinary;
  throw ValidationError("unknown dataset format '" + name + "'");
}

}  // namespace ktl
