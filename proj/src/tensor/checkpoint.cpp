#include "insitu/tensor/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace insitu::tensor {

namespace {

constexpr std::array<char, 4> kMagic{'V', 'S', 'R', '1'};

template <class U>
void put_le(std::ostream& os, U value)
{
    static_assert(std::is_unsigned_v<U>);
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    os.write(bytes, sizeof(U));
}

template <class U>
U get_le(std::istream& is)
{
    unsigned char bytes[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw DataError("checkpoint: unexpected end of data");
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

} // namespace

void write_checkpoint(std::ostream& os, const std::vector<NamedTensor>& tensors)
{
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.size() > 0xFFFF) throw UsageError("checkpoint: tensor name too long");
        if (t.shape.size() > 0xFF) throw UsageError("checkpoint: tensor rank too large");
        if (shape_numel(t.shape) != t.values.size()) {
            throw ShapeError("checkpoint: tensor '" + t.name + "' has shape " + shape_str(t.shape) + " but " +
                             std::to_string(t.values.size()) + " values");
        }
        put_le<std::uint16_t>(os, static_cast<std::uint16_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.dtype));
        put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.shape.size()));
        for (auto d : t.shape) put_le<std::uint64_t>(os, d);
        for (double v : t.values) {
            if (t.dtype == DType::f32) {
                put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            } else {
                put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
            }
        }
    }
    if (!os) throw DataError("checkpoint: write failed");
}

std::vector<NamedTensor> read_checkpoint(std::istream& is)
{
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw DataError("checkpoint: bad magic, expected VSR1");
    const auto count = get_le<std::uint32_t>(is);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedTensor t;
        const auto len = get_le<std::uint16_t>(is);
        t.name.resize(len);
        if (!is.read(t.name.data(), len)) throw DataError("checkpoint: truncated tensor name");
        const auto dtype = get_le<std::uint8_t>(is);
        if (dtype > 1) throw DataError("checkpoint: unknown dtype code " + std::to_string(dtype) + " for '" + t.name + "'");
        t.dtype = static_cast<DType>(dtype);
        const auto rank = get_le<std::uint8_t>(is);
        for (std::uint8_t i = 0; i < rank; ++i) t.shape.push_back(static_cast<std::size_t>(get_le<std::uint64_t>(is)));
        const std::size_t n = shape_numel(t.shape);
        t.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.values[i] = t.dtype == DType::f32 ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(is)))
                                                : std::bit_cast<double>(get_le<std::uint64_t>(is));
        }
        out.push_back(std::move(t));
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path.string() + " for writing");
    write_checkpoint(os, tensors);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint " + path.string());
    try {
        return read_checkpoint(is);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name)
{
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw DataError("checkpoint has no tensor named '" + name + "'");
}

} // namespace insitu::tensor
