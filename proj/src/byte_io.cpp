#include "moc/byte_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

#include "moc/error.hpp"

namespace moc {

void ByteWriter::put_bytes(std::string_view raw)
{
    bytes_.insert(bytes_.end(), raw.begin(), raw.end());
}

void ByteWriter::put_u16(std::uint16_t v)
{
    bytes_.push_back(static_cast<std::uint8_t>(v & 0xff));
    bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::put_u32(std::uint32_t v)
{
    for (int shift = 0; shift < 32; shift += 8) {
        bytes_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
    }
}

void ByteWriter::put_i32(std::int32_t v)
{
    put_u32(static_cast<std::uint32_t>(v));
}

void ByteWriter::put_u64(std::uint64_t v)
{
    for (int shift = 0; shift < 64; shift += 8) {
        bytes_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
    }
}

void ByteWriter::put_f32(float v)
{
    put_u32(std::bit_cast<std::uint32_t>(v));
}

void ByteWriter::put_f64(double v)
{
    put_u64(std::bit_cast<std::uint64_t>(v));
}

void ByteWriter::put_string16(std::string_view text)
{
    if (text.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw Error(ErrorKind::FormatViolation, "string longer than 65535 bytes");
    }
    put_u16(static_cast<std::uint16_t>(text.size()));
    put_bytes(text);
}

const std::uint8_t* ByteReader::take(std::size_t count)
{
    if (count > remaining()) {
        throw Error(ErrorKind::FormatViolation,
                    "truncated input: need " + std::to_string(count) + " bytes at offset " + std::to_string(offset_));
    }
    const std::uint8_t* at = bytes_.data() + offset_;
    offset_ += count;
    return at;
}

std::string ByteReader::get_bytes(std::size_t count)
{
    const std::uint8_t* at = take(count);
    return std::string(reinterpret_cast<const char*>(at), count);
}

std::uint16_t ByteReader::get_u16()
{
    const std::uint8_t* at = take(2);
    return static_cast<std::uint16_t>(at[0] | (at[1] << 8));
}

std::uint32_t ByteReader::get_u32()
{
    const std::uint8_t* at = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | at[i];
    }
    return v;
}

std::int32_t ByteReader::get_i32()
{
    return static_cast<std::int32_t>(get_u32());
}

std::uint64_t ByteReader::get_u64()
{
    const std::uint8_t* at = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | at[i];
    }
    return v;
}

float ByteReader::get_f32()
{
    return std::bit_cast<float>(get_u32());
}

double ByteReader::get_f64()
{
    return std::bit_cast<double>(get_u64());
}

std::string ByteReader::get_string16()
{
    return get_bytes(get_u16());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorKind::IoFailure, "short write to " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::filesystem::path& path, std::string_view text)
{
    write_file_bytes(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace moc
