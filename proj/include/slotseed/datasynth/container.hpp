#pragma once

#include "slotseed/numcore/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// "SLTC" tensor container: magic, version u8 (1), dtype u8, rank u8, rank x u32 LE dims,
// then the row-major little-endian payload. Nothing may follow the payload.
namespace slotseed::data {

enum class DType : std::uint8_t { f32 = 1, f64 = 2, u8 = 3 };

std::size_t element_size(DType dtype);

/// Tensor as stored on disk. Values are held as doubles, which represent every f32 and
/// u8 value exactly, so read(write(t)) is bitwise.
struct StoredTensor {
    DType dtype = DType::f64;
    num::Shape dims;
    std::vector<double> values;

    static StoredTensor from_tensor(const num::Tensor& t, DType dtype = DType::f64);
    num::Tensor to_tensor() const;
};

enum class FormatFault { bad_magic, bad_version, bad_dtype, truncated, trailing_bytes, bad_value };

class FormatError : public std::runtime_error {
  public:
    FormatError(FormatFault fault, const std::string& what) : std::runtime_error(what), fault_(fault) {}
    FormatFault fault() const { return fault_; }

  private:
    FormatFault fault_;
};

/// Raised for filesystem failures; the message names the path.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_tensor(const StoredTensor& t);
StoredTensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const StoredTensor& t);
StoredTensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace slotseed::data
