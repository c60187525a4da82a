#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vimu {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents. Throws vimu::Error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Incremental SHA-256 for hashing several inputs in sequence.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::string_view bytes);
    std::string hex_digest();

private:
    void* ctx_;
};

}  // namespace vimu
