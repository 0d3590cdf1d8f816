#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace moc {

/// Little-endian encoder shared by the binary file formats.
class ByteWriter {
public:
    void put_bytes(std::string_view raw);
    void put_u16(std::uint16_t v);
    void put_u32(std::uint32_t v);
    void put_i32(std::int32_t v);
    void put_u64(std::uint64_t v);
    void put_f32(float v);
    void put_f64(double v);
    /// u16 length prefix followed by the UTF-8 bytes.
    void put_string16(std::string_view text);

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked little-endian decoder; truncation raises FormatViolation.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::string get_bytes(std::size_t count);
    std::uint16_t get_u16();
    std::uint32_t get_u32();
    std::int32_t get_i32();
    std::uint64_t get_u64();
    float get_f32();
    double get_f64();
    std::string get_string16();

    std::size_t remaining() const noexcept { return bytes_.size() - offset_; }

private:
    const std::uint8_t* take(std::size_t count);

    std::span<const std::uint8_t> bytes_;
    std::size_t offset_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace moc
