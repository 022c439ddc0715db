#include "nsm/io.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

namespace nsm::io {

void atomic_write(const std::string& path, const std::string& bytes) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw FileError("cannot open " + tmp + " for writing");
        write_bytes(os, bytes.data(), bytes.size());
        os.flush();
        if (!os) throw FileError("flush failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw FileError("rename to " + path + " failed: " + ec.message());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace nsm::io
