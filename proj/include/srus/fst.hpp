#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "srus/errors.hpp"
#include "srus/grid.hpp"

// FST binary interchange format, little-endian:
//   magic "FST1" (4 bytes), u32 version=1, u32 nframes, u32 ny, u32 nx,
//   f64 dy_m, f64 dx_m, f64 dt_s, f64 wavelength_m,
//   payload: nframes*ny*nx float32, frame-major, row-major within a frame.
// Mask files share the header with nframes=1 and a u8 payload of 0/1.

namespace srus {

namespace detail {

constexpr long kFstHeaderBytes = 4 + 4 * 4 + 4 * 8; // magic + 4 u32 + 4 f64

class ByteWriter {
public:
    explicit ByteWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw DataError("cannot open for writing: " + path);
    }
    void u32(std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        raw(b, 4);
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(v);
        u32(static_cast<std::uint32_t>(u));
        u32(static_cast<std::uint32_t>(u >> 32));
    }
    void raw(const void* p, size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw DataError("write failed: " + path_);
    }
    void close() {
        out_.close();
        if (!out_) throw DataError("write failed on close: " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw DataError("cannot open: " + path);
    }
    std::uint32_t u32() {
        unsigned char b[4];
        raw(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() {
        std::uint64_t lo = u32();
        std::uint64_t hi = u32();
        return std::bit_cast<double>(lo | (hi << 32));
    }
    void raw(void* p, size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            fail("truncated payload");
        offset_ += static_cast<long>(n);
    }
    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }
    long offset() const { return offset_; }
    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream os;
        os << path_ << ": " << what << " at byte offset " << offset_;
        throw DataError(os.str());
    }

private:
    std::string path_;
    std::ifstream in_;
    long offset_ = 0;
};

inline GridGeometry read_fst_header(ByteReader& r, std::uint32_t& nframes) {
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "FST1", 4) != 0) {
        std::ostringstream os;
        os << "bad magic, expected \"FST1\"";
        r.fail(os.str());
    }
    std::uint32_t version = r.u32();
    if (version != 1) r.fail("unsupported version " + std::to_string(version));
    nframes = r.u32();
    GridGeometry g;
    g.ny = static_cast<int>(r.u32());
    g.nx = static_cast<int>(r.u32());
    g.dy = r.f64();
    g.dx = r.f64();
    g.dt = r.f64();
    g.wavelength = r.f64();
    if (nframes < 1) r.fail("header declares zero frames");
    if (g.ny < 1 || g.nx < 1) r.fail("header declares empty grid");
    if (!(g.dy > 0) || !(g.dx > 0) || !(g.dt > 0) || !(g.wavelength > 0) ||
        !std::isfinite(g.dy) || !std::isfinite(g.dx) || !std::isfinite(g.dt) ||
        !std::isfinite(g.wavelength))
        r.fail("header has non-positive or non-finite geometry");
    return g;
}

inline void write_fst_header(ByteWriter& w, const GridGeometry& g, std::uint32_t nframes) {
    w.raw("FST1", 4);
    w.u32(1);
    w.u32(nframes);
    w.u32(static_cast<std::uint32_t>(g.ny));
    w.u32(static_cast<std::uint32_t>(g.nx));
    w.f64(g.dy);
    w.f64(g.dx);
    w.f64(g.dt);
    w.f64(g.wavelength);
}

} // namespace detail

// Header-only read: geometry and frame count without loading the payload.
inline GridGeometry load_geometry(const std::string& path, std::uint32_t* nframes_out = nullptr) {
    detail::ByteReader r(path);
    std::uint32_t nframes = 0;
    GridGeometry g = detail::read_fst_header(r, nframes);
    if (nframes_out) *nframes_out = nframes;
    return g;
}

inline FrameStack load_stack(const std::string& path) {
    detail::ByteReader r(path);
    std::uint32_t nframes = 0;
    GridGeometry g = detail::read_fst_header(r, nframes);
    FrameStack s;
    s.geom = g;
    s.frames.reserve(nframes);
    const long npx = g.npixels();
    std::vector<std::uint32_t> raw(npx);
    for (std::uint32_t t = 0; t < nframes; ++t) {
        r.raw(raw.data(), static_cast<size_t>(npx) * 4);
        std::vector<double> plane(npx);
        for (long k = 0; k < npx; ++k) {
            float v = std::bit_cast<float>(raw[k]);
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "non-finite value in frame " << t << " (byte offset "
                   << detail::kFstHeaderBytes + (static_cast<long>(t) * npx + k) * 4 << ")";
                throw DataError(path + ": " + os.str());
            }
            plane[k] = v;
        }
        s.frames.push_back(std::move(plane));
    }
    if (!r.at_eof()) r.fail("trailing bytes after declared payload");
    return s;
}

inline void save_stack(const FrameStack& s, const std::string& path) {
    check_stack(s);
    detail::ByteWriter w(path);
    detail::write_fst_header(w, s.geom, static_cast<std::uint32_t>(s.nframes()));
    std::vector<std::uint32_t> raw(s.geom.npixels());
    for (const auto& f : s.frames) {
        for (size_t k = 0; k < f.size(); ++k)
            raw[k] = std::bit_cast<std::uint32_t>(static_cast<float>(f[k]));
        w.raw(raw.data(), raw.size() * 4);
    }
    w.close();
}

inline VesselMask load_mask(const std::string& path) {
    detail::ByteReader r(path);
    std::uint32_t nframes = 0;
    GridGeometry g = detail::read_fst_header(r, nframes);
    if (nframes != 1) r.fail("mask file must declare nframes=1");
    std::vector<std::uint8_t> bits(g.npixels());
    r.raw(bits.data(), bits.size());
    for (long k = 0; k < g.npixels(); ++k)
        if (bits[k] > 1) {
            std::ostringstream os;
            os << "mask byte not 0/1 (byte offset " << detail::kFstHeaderBytes + k << ")";
            throw DataError(path + ": " + os.str());
        }
    if (!r.at_eof()) r.fail("trailing bytes after declared payload");
    return mask_from_image(std::move(bits), g);
}

inline void save_mask(const VesselMask& m, const std::string& path) {
    detail::ByteWriter w(path);
    detail::write_fst_header(w, m.geom, 1);
    w.raw(m.bits.data(), m.bits.size());
    w.close();
}

} // namespace srus
