#pragma once

// "VSR1" checkpoint container:
//   magic "VSR1" | u32 count | per tensor: u16 name_len, name (UTF-8),
//   u8 dtype (0 = f32, 1 = f64), u8 rank, rank x u64 dims, raw data.
// All integers and floats little-endian.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "insitu/tensor/tensor.hpp"

namespace insitu::tensor {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

struct NamedTensor {
    std::string name;
    DType dtype = DType::f64;
    Shape shape;
    std::vector<double> values;
};

void write_checkpoint(std::ostream& os, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Finds `name` or throws DataError.
const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);

} // namespace insitu::tensor
