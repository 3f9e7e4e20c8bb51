#pragma once

// Minimal .npy (format version 1.0) I/O for little-endian f4/f8/i4 arrays.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "distillkit/errors.hpp"

namespace distillkit::npy {

struct Array {
    std::string dtype;  // "<f4", "<f8" or "<i4"
    std::vector<std::size_t> shape;
    std::vector<char> raw;

    std::size_t count() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
};

inline std::string shape_tuple(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) os << shape[i] << ", ";
    os << ")";
    return os.str();
}

inline void write(const std::string& path, const Array& a) {
    std::string header = "{'descr': '" + a.dtype + "', 'fortran_order': False, 'shape': " +
                         shape_tuple(a.shape) + ", }";
    // Pad so that magic(6)+version(2)+hlen(2)+header is a multiple of 64.
    std::size_t unpadded = 10 + header.size() + 1;
    std::size_t pad = (64 - unpadded % 64) % 64;
    header.append(pad, ' ');
    header.push_back('\n');

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("npy: cannot open for write: " + path);
    const char magic[] = "\x93NUMPY";
    f.write(magic, 6);
    f.put(1).put(0);
    const auto hlen = static_cast<std::uint16_t>(header.size());
    f.put(static_cast<char>(hlen & 0xff)).put(static_cast<char>(hlen >> 8));
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(a.raw.data(), static_cast<std::streamsize>(a.raw.size()));
    if (!f) throw IoError("npy: write failed: " + path);
}

inline Array read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("npy: cannot open for read: " + path);
    char magic[6];
    f.read(magic, 6);
    if (!f || std::memcmp(magic, "\x93NUMPY", 6) != 0)
        throw IntegrityError("npy: bad magic in " + path);
    char ver[2];
    f.read(ver, 2);
    unsigned char l0 = 0, l1 = 0;
    f.read(reinterpret_cast<char*>(&l0), 1);
    f.read(reinterpret_cast<char*>(&l1), 1);
    const std::size_t hlen = l0 | (static_cast<std::size_t>(l1) << 8);
    std::string header(hlen, '\0');
    f.read(header.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw IntegrityError("npy: truncated header in " + path);

    Array a;
    auto dp = header.find("'descr':");
    auto q1 = header.find('\'', dp + 8);
    auto q2 = header.find('\'', q1 + 1);
    if (dp == std::string::npos || q2 == std::string::npos)
        throw IntegrityError("npy: malformed header in " + path);
    a.dtype = header.substr(q1 + 1, q2 - q1 - 1);
    if (header.find("'fortran_order': False") == std::string::npos)
        throw IntegrityError("npy: fortran order unsupported: " + path);
    auto sp = header.find("'shape':");
    auto p1 = header.find('(', sp);
    auto p2 = header.find(')', p1);
    std::string dims = header.substr(p1 + 1, p2 - p1 - 1);
    std::istringstream ds(dims);
    std::string tok;
    while (std::getline(ds, tok, ',')) {
        std::string trimmed;
        for (char ch : tok)
            if (!std::isspace(static_cast<unsigned char>(ch))) trimmed += ch;
        if (!trimmed.empty()) a.shape.push_back(std::stoull(trimmed));
    }

    std::size_t item = 0;
    if (a.dtype == "<f4" || a.dtype == "<i4") item = 4;
    else if (a.dtype == "<f8") item = 8;
    else throw IntegrityError("npy: unsupported dtype '" + a.dtype + "' in " + path);
    a.raw.resize(a.count() * item);
    f.read(a.raw.data(), static_cast<std::streamsize>(a.raw.size()));
    if (!f) throw IntegrityError("npy: truncated data in " + path);
    return a;
}

inline Array from_floats(const std::vector<float>& v, std::vector<std::size_t> shape) {
    Array a;
    a.dtype = "<f4";
    a.shape = std::move(shape);
    a.raw.resize(v.size() * 4);
    std::memcpy(a.raw.data(), v.data(), a.raw.size());
    return a;
}

inline Array from_ints(const std::vector<std::int32_t>& v, std::vector<std::size_t> shape) {
    Array a;
    a.dtype = "<i4";
    a.shape = std::move(shape);
    a.raw.resize(v.size() * 4);
    std::memcpy(a.raw.data(), v.data(), a.raw.size());
    return a;
}

inline std::vector<float> to_floats(const Array& a) {
    if (a.dtype != "<f4") throw IntegrityError("npy: expected <f4 array");
    std::vector<float> v(a.count());
    std::memcpy(v.data(), a.raw.data(), a.raw.size());
    return v;
}

inline std::vector<std::int32_t> to_ints(const Array& a) {
    if (a.dtype != "<i4") throw IntegrityError("npy: expected <i4 array");
    std::vector<std::int32_t> v(a.count());
    std::memcpy(v.data(), a.raw.data(), a.raw.size());
    return v;
}

}  // namespace distillkit::npy
