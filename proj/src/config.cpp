#include "zpi/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "zpi/error.hpp"
#include "zpi/io.hpp"

namespace zpi {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    in.imbue(std::locale::classic());
    T v{};
    char extra = 0;
    if (!(in >> v) || (in >> extra)) {
        throw ConfigError("key '" + key + "': cannot parse '" + value + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

SmoothKernel parse_kernel(const std::string& value) {
    if (value == "identity") return SmoothKernel::identity();
    if (value == "tapered" || value == "default") return SmoothKernel::tapered();
    const auto taps = split_list(value);
    if (taps.size() != 3) {
        throw ConfigError("key 'kernel': expected identity, tapered, default, or three taps l1,l2,l3");
    }
    SmoothKernel k{parse_number<double>("kernel", taps[0]), parse_number<double>("kernel", taps[1]),
                   parse_number<double>("kernel", taps[2])};
    try {
        k.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("key 'kernel': ") + e.what());
    }
    return k;
}

}  // namespace

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("ZPI_OUT_DIR"); env && *env) return env;
    return "zpi_out";
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "q") {
        q = parse_number<double>(key, value);
    } else if (key == "lambda") {
        lambda = parse_number<double>(key, value);
    } else if (key == "nbar") {
        nbar = parse_number<double>(key, value);
    } else if (key == "M") {
        M = parse_number<int>(key, value);
    } else if (key == "mask") {
        mask = value;
    } else if (key == "mask_digest") {
        mask_digest = value;
    } else if (key == "width") {
        width = parse_number<int>(key, value);
    } else if (key == "height") {
        height = parse_number<int>(key, value);
    } else if (key == "frames") {
        frames = parse_number<std::int64_t>(key, value);
        if (frames < 1) throw ConfigError("key 'frames': must be at least 1");
    } else if (key == "pulses_per_frame") {
        pulses_per_frame = parse_number<int>(key, value);
        if (pulses_per_frame < 1) throw ConfigError("key 'pulses_per_frame': must be at least 1");
    } else if (key == "seed") {
        seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "mode") {
        mode = parse_sim_mode(value);
    } else if (key == "threads") {
        threads = parse_number<int>(key, value);
        if (threads < 1) throw ConfigError("key 'threads': must be at least 1");
    } else if (key == "methods") {
        methods = split_list(value);
        for (const auto& m : methods) {
            if (m != "zpi" && m != "kphoton" && m != "cgi" && m != "ffgi") {
                throw ConfigError("key 'methods': unknown method '" + m + "' (zpi, kphoton, cgi, ffgi)");
            }
        }
    } else if (key == "k") {
        k.clear();
        for (const auto& item : split_list(value)) {
            const int v = parse_number<int>(key, item);
            if (v < 0) throw ConfigError("key 'k': photon numbers must be nonnegative");
            k.push_back(v);
        }
    } else if (key == "out_dir") {
        out_dir = value;
    } else if (key == "patterns") {
        patterns_file = value;
    } else if (key == "frames_file") {
        frames_file = value;
    } else if (key == "hist") {
        hist_file = value;
    } else if (key == "kernel") {
        kernel = parse_kernel(value);
    } else if (key == "renormalize") {
        renormalize = parse_bool(key, value);
    } else if (key == "normalize") {
        normalize = parse_bool(key, value);
    } else if (key == "fit_sigma") {
        fit_sigma = parse_bool(key, value);
    } else if (key == "max_evaluations") {
        max_evaluations = parse_number<int>(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

RunConfig RunConfig::parse(std::istream& is, const std::string& source) {
    RunConfig cfg;
    cfg.out_dir = default_out_dir();
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no);
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        try {
            cfg.set(key, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    RunConfig cfg = parse(is, path.string());
    // Relative paths inside a config file are relative to the file.
    const auto base = path.parent_path();
    for (auto* p : {&cfg.mask, &cfg.patterns_file, &cfg.frames_file, &cfg.hist_file}) {
        if (*p && p->value().is_relative()) *p = base / p->value();
    }
    return cfg;
}

int RunConfig::resolve_M() const {
    if (mask) {
        if (!std::filesystem::exists(*mask)) {
            throw ConfigError("key 'mask': file '" + mask->string() + "' does not exist");
        }
        const ObjectMask m = io::read_mask(*mask);
        if (M && *M != m.count()) {
            throw ConfigError("key 'M': " + std::to_string(*M) + " disagrees with the mask's " +
                              std::to_string(m.count()) + " object pixels");
        }
        return m.count();
    }
    if (!M) throw ConfigError("key 'M': mode count needs M or a mask");
    if (*M < 1) throw ConfigError("key 'M': must be at least 1");
    return *M;
}

double RunConfig::resolve_lambda(int modes) const {
    if (lambda && nbar) throw ConfigError("keys 'lambda' and 'nbar': give exactly one");
    if (lambda) return *lambda;
    if (!nbar) throw ConfigError("keys 'lambda' and 'nbar': one of them is required");
    if (!q || *q <= 0.0) throw ConfigError("key 'nbar': deriving lambda = nbar / (M q) needs q > 0");
    return *nbar / (modes * *q);
}

ModePhysics RunConfig::resolve_physics(int modes) const {
    if (!q) throw ConfigError("key 'q': required");
    ModePhysics phys{*q, resolve_lambda(modes)};
    try {
        phys.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return phys;
}

}  // namespace zpi
