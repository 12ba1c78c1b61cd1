#pragma once
// Shared error types and little-endian binary IO helpers.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathqa {

// Exit codes used by the CLI: 0 success, 1 usage, 2 data integrity, 3 numerical.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumeric = 3,
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (parse errors, integrity violations).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure (zero-norm states, diverged training).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Little-endian binary IO. All on-disk formats are little-endian; the writers
// below are byte-order explicit so files are identical across hosts.

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path)
        : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw DataError("cannot open for writing: " + path);
    }

    void bytes(const void* data, size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void u32(uint32_t v) { put_le(v); }
    void u64(uint64_t v) { put_le(v); }
    void f64(double v) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        __builtin_memcpy(&bits, &v, sizeof(bits));
        put_le(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void magic(const char (&m)[6]) { bytes(m, 5); }

    void close() {
        out_.close();
        if (!out_) throw DataError("write failed: " + path_);
    }

private:
    template <typename T>
    void put_le(T v) {
        unsigned char buf[sizeof(T)];
        for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, sizeof(T));
    }
    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path)
        : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw DataError("cannot open: " + path);
    }

    void bytes(void* data, size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw DataError("truncated file: " + path_);
    }
    uint32_t u32() { return get_le<uint32_t>(); }
    uint64_t u64() { return get_le<uint64_t>(); }
    double f64() {
        uint64_t bits = get_le<uint64_t>();
        double v;
        __builtin_memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str() {
        uint32_t n = u32();
        std::string s(n, '\0');
        if (n) bytes(s.data(), n);
        return s;
    }
    void expect_magic(const char (&m)[6]) {
        char got[5];
        bytes(got, 5);
        if (__builtin_memcmp(got, m, 5) != 0)
            throw DataError("bad magic in " + path_ + " (expected " + std::string(m, 5) + ")");
    }
    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

private:
    template <typename T>
    T get_le() {
        unsigned char buf[sizeof(T)];
        bytes(buf, sizeof(T));
        T v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
        return v;
    }
    std::ifstream in_;
    std::string path_;
};

std::string read_text_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace pathqa
