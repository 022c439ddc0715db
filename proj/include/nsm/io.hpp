#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsm::io {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw FileError("write failed");
}

inline void read_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n)) throw FileError("unexpected end of file");
}

inline void write_u16(std::ostream& os, uint16_t v) { write_bytes(os, &v, sizeof v); }
inline void write_u32(std::ostream& os, uint32_t v) { write_bytes(os, &v, sizeof v); }
inline void write_u64(std::ostream& os, uint64_t v) { write_bytes(os, &v, sizeof v); }
inline void write_f64(std::ostream& os, double v) { write_bytes(os, &v, sizeof v); }

inline uint16_t read_u16(std::istream& is) { uint16_t v; read_bytes(is, &v, sizeof v); return v; }
inline uint32_t read_u32(std::istream& is) { uint32_t v; read_bytes(is, &v, sizeof v); return v; }
inline uint64_t read_u64(std::istream& is) { uint64_t v; read_bytes(is, &v, sizeof v); return v; }
inline double read_f64(std::istream& is) { double v; read_bytes(is, &v, sizeof v); return v; }

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    write_bytes(os, s.data(), s.size());
}

inline std::string read_string(std::istream& is, uint32_t max_len = 1u << 20) {
    uint32_t n = read_u32(is);
    if (n > max_len) throw FileError("string length out of range");
    std::string s(n, '\0');
    if (n) read_bytes(is, s.data(), n);
    return s;
}

// Write to <path>.tmp then rename, so readers never observe a torn file.
void atomic_write(const std::string& path, const std::string& bytes);

std::string slurp(const std::string& path);

}  // namespace nsm::io
