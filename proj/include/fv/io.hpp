#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fv/errors.hpp"

namespace fv::io {

// Minimal zip-of-arrays container support: enough to read the published 2D
// Shapes archive (stored or deflate entries) and to write our own archives
// (stored entries, fixed timestamps so outputs are byte-reproducible).
// No zip64; entries must stay below 4 GiB.

struct ZipEntryInfo {
    std::string name;
    std::uint32_t crc32 = 0;
    std::uint64_t compressed_size = 0;
    std::uint64_t uncompressed_size = 0;
    std::uint16_t method = 0;  // 0 stored, 8 deflate
    std::uint64_t local_header_offset = 0;
};

class ZipReader {
  public:
    explicit ZipReader(const std::filesystem::path& path);

    const std::vector<ZipEntryInfo>& entries() const { return entries_; }
    bool contains(const std::string& name) const;
    // Decompresses and CRC-checks the entry; throws FormatError on damage.
    std::vector<std::uint8_t> read(const std::string& name) const;

  private:
    std::filesystem::path path_;
    std::vector<ZipEntryInfo> entries_;
};

class ZipWriter {
  public:
    explicit ZipWriter(const std::filesystem::path& path);
    ~ZipWriter();

    ZipWriter(const ZipWriter&) = delete;
    ZipWriter& operator=(const ZipWriter&) = delete;

    void add(const std::string& name, const std::uint8_t* data, std::size_t size);
    void add(const std::string& name, const std::vector<std::uint8_t>& data);
    // Writes the central directory. Called automatically by the destructor
    // if not invoked explicitly.
    void finish();

  private:
    struct Impl;
    Impl* impl_;
};

// ---- npy ---------------------------------------------------------------

struct NpyArray {
    std::string dtype;  // '|u1', '<f4', '<f8', '<i8'
    std::vector<std::int64_t> shape;
    std::vector<std::uint8_t> raw;

    std::int64_t numel() const;
    std::size_t element_size() const;

    template <typename T>
    const T* as() const {
        if (sizeof(T) != element_size())
            throw FormatError("npy: element size mismatch for dtype " + dtype);
        return reinterpret_cast<const T*>(raw.data());
    }
};

NpyArray npy_decode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> npy_encode(const std::string& dtype,
                                     const std::vector<std::int64_t>& shape,
                                     const std::uint8_t* data, std::size_t size);

std::size_t npy_dtype_size(const std::string& dtype);

// Raw deflate helpers (window bits -15), shared by the zip reader/writer and
// the tests that synthesize compressed archives.
std::vector<std::uint8_t> deflate_raw(const std::uint8_t* data, std::size_t size);
std::vector<std::uint8_t> inflate_raw(const std::uint8_t* data, std::size_t size,
                                      std::size_t expected_size);

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size);

}  // namespace fv::io
