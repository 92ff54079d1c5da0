#include "slotseed/datasynth/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace slotseed::data {

namespace {

constexpr std::uint8_t magic[4] = {'S', 'L', 'T', 'C'};
constexpr std::uint8_t version = 1;

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <class T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

} // namespace

std::size_t element_size(DType dtype) {
    switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8: return 1;
    }
    throw FormatError(FormatFault::bad_dtype, "unknown dtype code " + std::to_string(static_cast<int>(dtype)));
}

StoredTensor StoredTensor::from_tensor(const num::Tensor& t, DType dtype) {
    return StoredTensor{dtype, t.dims(), std::vector<double>(t.values().begin(), t.values().end())};
}

num::Tensor StoredTensor::to_tensor() const { return num::Tensor(dims, values); }

std::vector<std::uint8_t> encode_tensor(const StoredTensor& t) {
    const std::size_t width = element_size(t.dtype);
    if (t.dims.size() > std::numeric_limits<std::uint8_t>::max()) throw std::invalid_argument("tensor rank exceeds 255");
    if (num::shape_size(t.dims) != t.values.size()) throw num::DimensionError("value count does not match dims");
    std::vector<std::uint8_t> out(std::begin(magic), std::end(magic));
    out.reserve(7 + 4 * t.dims.size() + width * t.values.size());
    out.push_back(version);
    out.push_back(static_cast<std::uint8_t>(t.dtype));
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (std::size_t d : t.dims) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("tensor extent exceeds u32");
        put(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.values) {
        switch (t.dtype) {
        case DType::f32: put(out, static_cast<float>(v)); break;
        case DType::f64: put(out, v); break;
        case DType::u8:
            if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) {
                throw FormatError(FormatFault::bad_value, "value " + std::to_string(v) + " is not a u8");
            }
            out.push_back(static_cast<std::uint8_t>(v));
            break;
        }
    }
    return out;
}

StoredTensor decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), magic, 4) != 0) throw FormatError(FormatFault::bad_magic, "missing SLTC magic");
    if (bytes.size() < 7) throw FormatError(FormatFault::truncated, "header truncated");
    if (bytes[4] != version) throw FormatError(FormatFault::bad_version, "unsupported container version " + std::to_string(bytes[4]));
    const std::uint8_t code = bytes[5];
    if (code < 1 || code > 3) throw FormatError(FormatFault::bad_dtype, "unknown dtype code " + std::to_string(code));
    StoredTensor t;
    t.dtype = static_cast<DType>(code);
    const std::size_t rank = bytes[6];
    std::size_t offset = 7;
    if (bytes.size() < offset + 4 * rank) throw FormatError(FormatFault::truncated, "dims truncated");
    for (std::size_t i = 0; i < rank; ++i, offset += 4) t.dims.push_back(get<std::uint32_t>(bytes, offset));

    const std::size_t count = num::shape_size(t.dims);
    const std::size_t width = element_size(t.dtype);
    const std::size_t remaining = bytes.size() - offset;
    if (count > remaining / width) {
        throw FormatError(FormatFault::truncated, "payload truncated: need " + std::to_string(count * width) + " bytes, have " +
                                                      std::to_string(remaining));
    }
    if (remaining != count * width) {
        throw FormatError(FormatFault::trailing_bytes, std::to_string(remaining - count * width) + " bytes after payload");
    }
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i, offset += width) {
        switch (t.dtype) {
        case DType::f32: t.values[i] = get<float>(bytes, offset); break;
        case DType::f64: t.values[i] = get<double>(bytes, offset); break;
        case DType::u8: t.values[i] = bytes[offset]; break;
        }
    }
    return t;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_tensor(const std::filesystem::path& path, const StoredTensor& t) { write_file(path, encode_tensor(t)); }

StoredTensor read_tensor(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_tensor(bytes);
    } catch (const FormatError& e) {
        throw FormatError(e.fault(), path.string() + ": " + e.what());
    }
}

} // namespace slotseed::data
