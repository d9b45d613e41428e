#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "zpi/pdf.hpp"
#include "zpi/recon.hpp"
#include "zpi/sim.hpp"

namespace zpi::io {

/// Shortest "%.17g" rendering, enough digits to round-trip any double.
std::string format_double(double v);

// Pattern file: "ZPIPAT1\n", then "width height count q seed\n", then count planes of
// ceil(width*height/8) bytes each, row-major, most significant bit first.
void write_patterns(std::ostream& os, const PatternSet& patterns);
PatternSet read_patterns(std::istream& is);
void write_patterns(const std::filesystem::path& path, const PatternSet& patterns);
PatternSet read_patterns(const std::filesystem::path& path);

// Frames CSV: header "frame,n,first_pulse"; first_pulse is -1 when nothing was detected.
void write_frames(std::ostream& os, std::span<const FrameRecord> frames);
std::vector<FrameRecord> read_frames(std::istream& is);
void write_frames(const std::filesystem::path& path, std::span<const FrameRecord> frames);
std::vector<FrameRecord> read_frames(const std::filesystem::path& path);

// Plain PBM (P1); a 1 marks an object pixel.
void write_mask(std::ostream& os, const ObjectMask& mask);
ObjectMask read_mask(std::istream& is);
void write_mask(const std::filesystem::path& path, const ObjectMask& mask);
ObjectMask read_mask(const std::filesystem::path& path);

// Histogram CSV: header "n,probability", 17 significant digits. Rows may come in any
// order; missing n are zero.
void write_histogram(std::ostream& os, const PhotonPdf& pdf);
PhotonPdf read_histogram(std::istream& is);
void write_histogram(const std::filesystem::path& path, const PhotonPdf& pdf);
PhotonPdf read_histogram(const std::filesystem::path& path);

// Image CSV: one line per row, full precision.
void write_image_csv(std::ostream& os, const Image& img);
Image read_image_csv(std::istream& is);
void write_image_csv(const std::filesystem::path& path, const Image& img);
Image read_image_csv(const std::filesystem::path& path);

/// Plain PGM (P2), min-max scaled to 0..255. A constant image renders black.
void write_image_pgm(std::ostream& os, const Image& img);
void write_image_pgm(const std::filesystem::path& path, const Image& img);

/// 64-bit FNV-1a digest, rendered as 16 hex digits.
std::string digest_hex(std::string_view bytes);
std::string file_digest_hex(const std::filesystem::path& path);

}  // namespace zpi::io
