#include "fv/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "container formats assume a little-endian host");

namespace fv::io {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034B50;
constexpr std::uint32_t kCentralSig = 0x02014B50;
constexpr std::uint32_t kEocdSig = 0x06054B50;
// 1980-01-01, 00:00 in DOS format: fixed so archive bytes are reproducible.
constexpr std::uint16_t kDosDate = 0x0021;
constexpr std::uint16_t kDosTime = 0x0000;

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

}  // namespace

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
    std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, Z_NULL, 0));
    // Feed in chunks; zlib's length argument is 32-bit.
    while (size > 0) {
        const std::size_t chunk = std::min<std::size_t>(size, 1u << 30);
        crc = static_cast<std::uint32_t>(::crc32(crc, data, static_cast<uInt>(chunk)));
        data += chunk;
        size -= chunk;
    }
    return crc;
}

std::vector<std::uint8_t> deflate_raw(const std::uint8_t* data, std::size_t size) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_BEST_SPEED, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw IoError("deflate: init failed");
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> buf(1 << 20);
    zs.next_in = const_cast<Bytef*>(data);
    std::size_t remaining = size;
    int ret = Z_OK;
    do {
        const std::size_t chunk = std::min<std::size_t>(remaining, 1u << 30);
        zs.avail_in = static_cast<uInt>(chunk);
        remaining -= chunk;
        const int flush = remaining == 0 ? Z_FINISH : Z_NO_FLUSH;
        do {
            zs.next_out = buf.data();
            zs.avail_out = static_cast<uInt>(buf.size());
            ret = deflate(&zs, flush);
            if (ret == Z_STREAM_ERROR) {
                deflateEnd(&zs);
                throw IoError("deflate: stream error");
            }
            out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
        } while (zs.avail_out == 0);
    } while (remaining > 0 || ret != Z_STREAM_END);
    deflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> inflate_raw(const std::uint8_t* data, std::size_t size,
                                      std::size_t expected_size) {
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw IoError("inflate: init failed");
    std::vector<std::uint8_t> out(expected_size);
    zs.next_in = const_cast<Bytef*>(data);
    zs.next_out = out.data();
    std::size_t in_remaining = size;
    std::size_t out_remaining = expected_size;
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        const std::size_t in_chunk = std::min<std::size_t>(in_remaining, 1u << 30);
        const std::size_t out_chunk = std::min<std::size_t>(out_remaining, 1u << 30);
        zs.avail_in = static_cast<uInt>(in_chunk);
        zs.avail_out = static_cast<uInt>(out_chunk);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError("zip: corrupt deflate stream");
        }
        in_remaining = zs.avail_in + (in_remaining - in_chunk);
        out_remaining = zs.avail_out + (out_remaining - out_chunk);
        if (ret != Z_STREAM_END && zs.avail_out != 0 && zs.avail_in == 0 && in_remaining == 0) {
            inflateEnd(&zs);
            throw FormatError("zip: truncated deflate stream");
        }
    }
    inflateEnd(&zs);
    if (out_remaining != 0) throw FormatError("zip: entry shorter than declared size");
    return out;
}

// ---- ZipReader -----------------------------------------------------------

ZipReader::ZipReader(const std::filesystem::path& path) : path_(path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("zip: cannot open " + path.string());
    f.seekg(0, std::ios::end);
    const std::int64_t file_size = f.tellg();
    if (file_size < 22) throw FormatError("zip: file too small for an archive");

    // Locate the end-of-central-directory record from the back.
    const std::int64_t scan = std::min<std::int64_t>(file_size, 22 + 65536);
    std::vector<std::uint8_t> tail(static_cast<std::size_t>(scan));
    f.seekg(file_size - scan);
    f.read(reinterpret_cast<char*>(tail.data()), scan);
    std::int64_t eocd = -1;
    for (std::int64_t i = scan - 22; i >= 0; --i) {
        if (get<std::uint32_t>(tail.data() + i) == kEocdSig) {
            eocd = i;
            break;
        }
    }
    if (eocd < 0) throw FormatError("zip: end-of-central-directory record not found");

    const std::uint16_t count = get<std::uint16_t>(tail.data() + eocd + 10);
    const std::uint32_t cd_size = get<std::uint32_t>(tail.data() + eocd + 12);
    const std::uint32_t cd_offset = get<std::uint32_t>(tail.data() + eocd + 16);
    if (static_cast<std::int64_t>(cd_offset) + cd_size > file_size)
        throw FormatError("zip: central directory out of bounds");

    std::vector<std::uint8_t> cd(cd_size);
    f.seekg(cd_offset);
    f.read(reinterpret_cast<char*>(cd.data()), cd_size);
    if (!f) throw FormatError("zip: truncated central directory");

    std::size_t pos = 0;
    for (std::uint16_t i = 0; i < count; ++i) {
        if (pos + 46 > cd.size() || get<std::uint32_t>(cd.data() + pos) != kCentralSig)
            throw FormatError("zip: damaged central directory entry");
        ZipEntryInfo e;
        e.method = get<std::uint16_t>(cd.data() + pos + 10);
        e.crc32 = get<std::uint32_t>(cd.data() + pos + 16);
        e.compressed_size = get<std::uint32_t>(cd.data() + pos + 20);
        e.uncompressed_size = get<std::uint32_t>(cd.data() + pos + 24);
        const std::uint16_t name_len = get<std::uint16_t>(cd.data() + pos + 28);
        const std::uint16_t extra_len = get<std::uint16_t>(cd.data() + pos + 30);
        const std::uint16_t comment_len = get<std::uint16_t>(cd.data() + pos + 32);
        e.local_header_offset = get<std::uint32_t>(cd.data() + pos + 42);
        if (pos + 46 + name_len > cd.size()) throw FormatError("zip: truncated entry name");
        e.name.assign(reinterpret_cast<const char*>(cd.data() + pos + 46), name_len);
        pos += 46 + name_len + extra_len + comment_len;
        entries_.push_back(std::move(e));
    }
}

bool ZipReader::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const ZipEntryInfo& e) { return e.name == name; });
}

std::vector<std::uint8_t> ZipReader::read(const std::string& name) const {
    const auto it = std::find_if(entries_.begin(), entries_.end(),
                                 [&](const ZipEntryInfo& e) { return e.name == name; });
    if (it == entries_.end()) throw FormatError("zip: missing entry " + name);

    std::ifstream f(path_, std::ios::binary);
    if (!f) throw IoError("zip: cannot open " + path_.string());
    std::uint8_t hdr[30];
    f.seekg(static_cast<std::streamoff>(it->local_header_offset));
    f.read(reinterpret_cast<char*>(hdr), 30);
    if (!f || get<std::uint32_t>(hdr) != kLocalSig)
        throw FormatError("zip: damaged local header for " + name);
    const std::uint16_t name_len = get<std::uint16_t>(hdr + 26);
    const std::uint16_t extra_len = get<std::uint16_t>(hdr + 28);
    f.seekg(name_len + extra_len, std::ios::cur);

    std::vector<std::uint8_t> compressed(it->compressed_size);
    f.read(reinterpret_cast<char*>(compressed.data()),
           static_cast<std::streamsize>(compressed.size()));
    if (!f) throw FormatError("zip: truncated data for entry " + name);

    std::vector<std::uint8_t> out;
    if (it->method == 0) {
        if (it->compressed_size != it->uncompressed_size)
            throw FormatError("zip: stored entry size mismatch for " + name);
        out = std::move(compressed);
    } else if (it->method == 8) {
        out = inflate_raw(compressed.data(), compressed.size(),
                          static_cast<std::size_t>(it->uncompressed_size));
    } else {
        throw FormatError("zip: unsupported compression method for " + name);
    }
    if (crc32_of(out.data(), out.size()) != it->crc32)
        throw FormatError("zip: CRC mismatch for entry " + name);
    return out;
}

// ---- ZipWriter -----------------------------------------------------------

struct ZipWriter::Impl {
    std::ofstream f;
    std::vector<ZipEntryInfo> entries;
    bool finished = false;
    std::filesystem::path path;
};

ZipWriter::ZipWriter(const std::filesystem::path& path) : impl_(new Impl) {
    impl_->path = path;
    impl_->f.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->f) throw IoError("zip: cannot create " + path.string());
}

ZipWriter::~ZipWriter() {
    try {
        finish();
    } catch (...) {
    }
    delete impl_;
}

void ZipWriter::add(const std::string& name, const std::uint8_t* data, std::size_t size) {
    if (impl_->finished) throw IoError("zip: add after finish");
    if (size >= 0xFFFFFFFFull) throw IoError("zip: entry too large (zip64 unsupported)");
    ZipEntryInfo e;
    e.name = name;
    e.method = 0;
    e.crc32 = crc32_of(data, size);
    e.compressed_size = e.uncompressed_size = size;
    e.local_header_offset = static_cast<std::uint64_t>(impl_->f.tellp());

    std::vector<std::uint8_t> hdr;
    put<std::uint32_t>(hdr, kLocalSig);
    put<std::uint16_t>(hdr, 20);
    put<std::uint16_t>(hdr, 0);
    put<std::uint16_t>(hdr, e.method);
    put<std::uint16_t>(hdr, kDosTime);
    put<std::uint16_t>(hdr, kDosDate);
    put<std::uint32_t>(hdr, e.crc32);
    put<std::uint32_t>(hdr, static_cast<std::uint32_t>(e.compressed_size));
    put<std::uint32_t>(hdr, static_cast<std::uint32_t>(e.uncompressed_size));
    put<std::uint16_t>(hdr, static_cast<std::uint16_t>(name.size()));
    put<std::uint16_t>(hdr, 0);
    impl_->f.write(reinterpret_cast<const char*>(hdr.data()),
                   static_cast<std::streamsize>(hdr.size()));
    impl_->f.write(name.data(), static_cast<std::streamsize>(name.size()));
    impl_->f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!impl_->f) throw IoError("zip: write failed for " + impl_->path.string());
    impl_->entries.push_back(std::move(e));
}

void ZipWriter::add(const std::string& name, const std::vector<std::uint8_t>& data) {
    add(name, data.data(), data.size());
}

void ZipWriter::finish() {
    if (impl_->finished) return;
    const std::uint64_t cd_offset = static_cast<std::uint64_t>(impl_->f.tellp());
    std::vector<std::uint8_t> cd;
    for (const auto& e : impl_->entries) {
        put<std::uint32_t>(cd, kCentralSig);
        put<std::uint16_t>(cd, 20);
        put<std::uint16_t>(cd, 20);
        put<std::uint16_t>(cd, 0);
        put<std::uint16_t>(cd, e.method);
        put<std::uint16_t>(cd, kDosTime);
        put<std::uint16_t>(cd, kDosDate);
        put<std::uint32_t>(cd, e.crc32);
        put<std::uint32_t>(cd, static_cast<std::uint32_t>(e.compressed_size));
        put<std::uint32_t>(cd, static_cast<std::uint32_t>(e.uncompressed_size));
        put<std::uint16_t>(cd, static_cast<std::uint16_t>(e.name.size()));
        put<std::uint16_t>(cd, 0);
        put<std::uint16_t>(cd, 0);
        put<std::uint16_t>(cd, 0);
        put<std::uint16_t>(cd, 0);
        put<std::uint32_t>(cd, 0);
        put<std::uint32_t>(cd, static_cast<std::uint32_t>(e.local_header_offset));
        cd.insert(cd.end(), e.name.begin(), e.name.end());
    }
    put<std::uint32_t>(cd, kEocdSig);
    put<std::uint16_t>(cd, 0);
    put<std::uint16_t>(cd, 0);
    put<std::uint16_t>(cd, static_cast<std::uint16_t>(impl_->entries.size()));
    put<std::uint16_t>(cd, static_cast<std::uint16_t>(impl_->entries.size()));
    put<std::uint32_t>(cd, static_cast<std::uint32_t>(cd.size() > 22 ? cd.size() - 22 : 0));
    put<std::uint32_t>(cd, static_cast<std::uint32_t>(cd_offset));
    put<std::uint16_t>(cd, 0);
    impl_->f.write(reinterpret_cast<const char*>(cd.data()),
                   static_cast<std::streamsize>(cd.size()));
    impl_->f.flush();
    if (!impl_->f) throw IoError("zip: failed to finalize " + impl_->path.string());
    impl_->finished = true;
}

// ---- npy -------------------------------------------------------------------

std::size_t npy_dtype_size(const std::string& dtype) {
    if (dtype == "|u1" || dtype == "|b1") return 1;
    if (dtype == "<f4" || dtype == "<i4") return 4;
    if (dtype == "<f8" || dtype == "<i8") return 8;
    throw FormatError("npy: unsupported dtype " + dtype);
}

std::int64_t NpyArray::numel() const {
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

std::size_t NpyArray::element_size() const { return npy_dtype_size(dtype); }

NpyArray npy_decode(const std::vector<std::uint8_t>& bytes) {
    static const char magic[] = "\x93NUMPY";
    if (bytes.size() < 10 || std::memcmp(bytes.data(), magic, 6) != 0)
        throw FormatError("npy: bad magic");
    const std::uint8_t major = bytes[6];
    std::size_t header_len, header_off;
    if (major == 1) {
        header_len = get<std::uint16_t>(bytes.data() + 8);
        header_off = 10;
    } else if (major == 2 || major == 3) {
        if (bytes.size() < 12) throw FormatError("npy: truncated header");
        header_len = get<std::uint32_t>(bytes.data() + 8);
        header_off = 12;
    } else {
        throw FormatError("npy: unsupported version");
    }
    if (bytes.size() < header_off + header_len) throw FormatError("npy: truncated header");
    const std::string header(reinterpret_cast<const char*>(bytes.data() + header_off),
                             header_len);

    auto find_value = [&](const std::string& key) -> std::size_t {
        const auto pos = header.find("'" + key + "'");
        if (pos == std::string::npos) throw FormatError("npy: header missing key " + key);
        const auto colon = header.find(':', pos);
        if (colon == std::string::npos) throw FormatError("npy: malformed header");
        return colon + 1;
    };

    NpyArray arr;
    {
        std::size_t p = find_value("descr");
        const auto q1 = header.find('\'', p);
        const auto q2 = header.find('\'', q1 + 1);
        if (q1 == std::string::npos || q2 == std::string::npos)
            throw FormatError("npy: malformed descr");
        arr.dtype = header.substr(q1 + 1, q2 - q1 - 1);
    }
    {
        const std::size_t p = find_value("fortran_order");
        if (header.find("True", p) < header.find(',', p))
            throw FormatError("npy: fortran_order arrays unsupported");
    }
    {
        std::size_t p = find_value("shape");
        const auto open = header.find('(', p);
        const auto close = header.find(')', open);
        if (open == std::string::npos || close == std::string::npos)
            throw FormatError("npy: malformed shape");
        std::string dims = header.substr(open + 1, close - open - 1);
        std::size_t i = 0;
        while (i < dims.size()) {
            while (i < dims.size() && (dims[i] == ' ' || dims[i] == ',')) ++i;
            if (i >= dims.size()) break;
            std::size_t end = i;
            while (end < dims.size() && std::isdigit(static_cast<unsigned char>(dims[end]))) ++end;
            if (end == i) throw FormatError("npy: malformed shape");
            arr.shape.push_back(std::stoll(dims.substr(i, end - i)));
            i = end;
        }
    }

    const std::size_t expected =
        static_cast<std::size_t>(arr.numel()) * npy_dtype_size(arr.dtype);
    const std::size_t data_off = header_off + header_len;
    if (bytes.size() - data_off != expected)
        throw FormatError("npy: data size does not match header shape");
    arr.raw.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_off), bytes.end());
    return arr;
}

std::vector<std::uint8_t> npy_encode(const std::string& dtype,
                                     const std::vector<std::int64_t>& shape,
                                     const std::uint8_t* data, std::size_t size) {
    std::string dims;
    for (std::size_t i = 0; i < shape.size(); ++i) dims += std::to_string(shape[i]) + ", ";
    if (shape.size() > 1) dims = dims.substr(0, dims.size() - 2);

    std::string header =
        "{'descr': '" + dtype + "', 'fortran_order': False, 'shape': (" + dims + "), }";
    const std::size_t base = 6 + 2 + 2;
    std::size_t total = base + header.size() + 1;
    const std::size_t pad = (64 - total % 64) % 64;
    header.append(pad, ' ');
    header.push_back('\n');

    std::vector<std::uint8_t> out;
    out.reserve(base + header.size() + size);
    static const char magic[] = "\x93NUMPY";
    out.insert(out.end(), magic, magic + 6);
    out.push_back(1);
    out.push_back(0);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), data, data + size);

    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    if (static_cast<std::size_t>(n) * npy_dtype_size(dtype) != size)
        throw FormatError("npy encode: data size does not match shape");
    return out;
}

}  // namespace fv::io
