#include "zpi/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "zpi/error.hpp"

namespace zpi::io {
namespace {

constexpr std::string_view kPatternMagic = "ZPIPAT1";

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open '" + path.string() + "'");
    return is;
}

void finish(std::ostream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw DataError("write to '" + path.string() + "' failed");
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
}

template <typename Int>
Int parse_int(const std::string& text, const std::string& what) {
    Int v{};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw DataError("invalid " + what + " '" + text + "'");
    }
    return v;
}

double parse_double(const std::string& text, const std::string& what) {
    // from_chars for double is not available in every toolchain we build with.
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    double v = 0.0;
    char extra = 0;
    if (!(in >> v) || (in >> extra)) {
        throw DataError("invalid " + what + " '" + text + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

void write_patterns(std::ostream& os, const PatternSet& patterns) {
    os << kPatternMagic << '\n'
       << patterns.width() << ' ' << patterns.height() << ' ' << patterns.count() << ' '
       << format_double(patterns.q()) << ' ' << patterns.seed() << '\n';
    const auto bits = patterns.bits();
    os.write(reinterpret_cast<const char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
}

PatternSet read_patterns(std::istream& is) {
    std::string magic;
    std::string header;
    if (!std::getline(is, magic) || magic != kPatternMagic) {
        throw DataError("not a pattern file (missing ZPIPAT1 magic line)");
    }
    if (!std::getline(is, header)) {
        throw DataError("pattern file truncated before header");
    }
    const auto fields = split(trim(header), ' ');
    if (fields.size() != 5) {
        throw DataError("pattern header needs 'width height count q seed', got '" + header + "'");
    }
    const int width = parse_int<int>(fields[0], "pattern width");
    const int height = parse_int<int>(fields[1], "pattern height");
    const auto count = parse_int<std::int64_t>(fields[2], "pattern count");
    const double q = parse_double(fields[3], "pattern q");
    const auto seed = parse_int<std::uint64_t>(fields[4], "pattern seed");
    if (width <= 0 || height <= 0 || count < 0) {
        throw DataError("pattern header has invalid dimensions");
    }
    const std::size_t bytes =
        packed_size(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) * static_cast<std::size_t>(count);
    std::vector<std::uint8_t> bits(bytes);
    is.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(is.gcount()) != bytes) {
        throw DataError("pattern file truncated: expected " + std::to_string(bytes) + " payload bytes");
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw DataError("pattern file has trailing bytes after the last pattern");
    }
    return PatternSet(width, height, count, q, seed, std::move(bits));
}

void write_patterns(const std::filesystem::path& path, const PatternSet& patterns) {
    auto os = open_out(path);
    write_patterns(os, patterns);
    finish(os, path);
}

PatternSet read_patterns(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_patterns(is);
}

void write_frames(std::ostream& os, std::span<const FrameRecord> frames) {
    os << "frame,n,first_pulse\n";
    for (const auto& f : frames) {
        os << f.pattern_index << ',' << f.n << ',' << (f.first_pulse ? *f.first_pulse : -1) << '\n';
    }
}

std::vector<FrameRecord> read_frames(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "frame,n,first_pulse") {
        throw DataError("frames file must start with header 'frame,n,first_pulse'");
    }
    std::vector<FrameRecord> frames;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        const std::string where = "frames line " + std::to_string(line_no);
        if (fields.size() != 3) throw DataError(where + ": expected 3 fields");
        FrameRecord f;
        f.pattern_index = parse_int<std::int64_t>(fields[0], where + " frame");
        f.n = parse_int<int>(fields[1], where + " n");
        const int first = parse_int<int>(fields[2], where + " first_pulse");
        if (f.n < 0) throw DataError(where + ": negative photon count");
        if ((first >= 0) != (f.n >= 1) || first < -1) {
            throw DataError(where + ": first_pulse must be >= 0 exactly when n >= 1");
        }
        if (first >= 0) f.first_pulse = first;
        frames.push_back(f);
    }
    return frames;
}

void write_frames(const std::filesystem::path& path, std::span<const FrameRecord> frames) {
    auto os = open_out(path);
    write_frames(os, frames);
    finish(os, path);
}

std::vector<FrameRecord> read_frames(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_frames(is);
}

void write_mask(std::ostream& os, const ObjectMask& mask) {
    os << "P1\n" << mask.width() << ' ' << mask.height() << '\n';
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (x > 0 && x % 70 == 0) os << '\n';
            os << (mask[static_cast<std::size_t>(y * mask.width() + x)] ? '1' : '0');
        }
        os << '\n';
    }
}

ObjectMask read_mask(std::istream& is) {
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto skip = [&] {
        for (;;) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
            if (pos < text.size() && text[pos] == '#') {
                while (pos < text.size() && text[pos] != '\n') ++pos;
                continue;
            }
            return;
        }
    };
    auto token = [&] {
        skip();
        const std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != '#') ++pos;
        return text.substr(start, pos - start);
    };
    if (token() != "P1") {
        throw DataError("mask must be a plain PBM (P1) file");
    }
    const int width = parse_int<int>(token(), "mask width");
    const int height = parse_int<int>(token(), "mask height");
    if (width <= 0 || height <= 0) throw DataError("mask dimensions must be positive");
    std::vector<std::uint8_t> values;
    values.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    while (values.size() < static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        skip();
        if (pos >= text.size()) throw DataError("mask truncated: too few pixels");
        const char c = text[pos++];
        if (c != '0' && c != '1') throw DataError(std::string("invalid PBM pixel '") + c + "'");
        values.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    skip();
    if (pos != text.size()) throw DataError("mask has trailing data after the last pixel");
    return ObjectMask(width, height, std::move(values));
}

void write_mask(const std::filesystem::path& path, const ObjectMask& mask) {
    auto os = open_out(path);
    write_mask(os, mask);
    finish(os, path);
}

ObjectMask read_mask(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_mask(is);
}

void write_histogram(std::ostream& os, const PhotonPdf& pdf) {
    os << "n,probability\n";
    for (int n = 0; n <= pdf.n_max(); ++n) {
        os << n << ',' << format_double(pdf(n)) << '\n';
    }
}

PhotonPdf read_histogram(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "n,probability") {
        throw DataError("histogram file must start with header 'n,probability'");
    }
    std::map<int, double> bins;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "histogram line " + std::to_string(line_no);
        const auto fields = split(line, ',');
        if (fields.size() != 2) throw DataError(where + ": expected 2 fields");
        const int n = parse_int<int>(fields[0], where + " n");
        if (n < 0) throw DataError(where + ": negative photon number");
        if (!bins.emplace(n, parse_double(fields[1], where + " probability")).second) {
            throw DataError(where + ": duplicate bin n=" + std::to_string(n));
        }
    }
    if (bins.empty()) throw DataError("histogram has no bins");
    std::vector<double> values(static_cast<std::size_t>(bins.rbegin()->first) + 1, 0.0);
    for (const auto& [n, p] : bins) values[static_cast<std::size_t>(n)] = p;
    return PhotonPdf(std::move(values));
}

void write_histogram(const std::filesystem::path& path, const PhotonPdf& pdf) {
    auto os = open_out(path);
    write_histogram(os, pdf);
    finish(os, path);
}

PhotonPdf read_histogram(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_histogram(is);
}

void write_image_csv(std::ostream& os, const Image& img) {
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (x > 0) os << ',';
            os << format_double(img.at(x, y));
        }
        os << '\n';
    }
}

Image read_image_csv(std::istream& is) {
    std::vector<double> values;
    int width = -1;
    int height = 0;
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (width < 0) width = static_cast<int>(fields.size());
        if (static_cast<int>(fields.size()) != width) {
            throw DataError("image row " + std::to_string(height + 1) + " has a different width");
        }
        for (const auto& f : fields) values.push_back(parse_double(trim(f), "image value"));
        ++height;
    }
    if (height == 0) throw DataError("image file is empty");
    return Image(width, height, std::move(values));
}

void write_image_csv(const std::filesystem::path& path, const Image& img) {
    auto os = open_out(path);
    write_image_csv(os, img);
    finish(os, path);
}

Image read_image_csv(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_image_csv(is);
}

void write_image_pgm(std::ostream& os, const Image& img) {
    const auto values = img.values();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double span = *hi - *lo;
    os << "P2\n" << img.width() << ' ' << img.height() << "\n255\n";
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const int level = span > 0.0 ? static_cast<int>(std::lround(255.0 * (img.at(x, y) - *lo) / span)) : 0;
            os << level << ((x + 1) % 16 == 0 || x + 1 == img.width() ? '\n' : ' ');
        }
    }
}

void write_image_pgm(const std::filesystem::path& path, const Image& img) {
    auto os = open_out(path);
    write_image_pgm(os, img);
    finish(os, path);
}

std::string digest_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest_hex(const std::filesystem::path& path) {
    auto is = open_in(path);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return digest_hex(bytes);
}

}  // namespace zpi::io
