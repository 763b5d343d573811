#include "riskshare/format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace riskshare {

std::string format_g12(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

double round_sig12(double value) {
    if (!std::isfinite(value)) return value;
    return std::strtod(format_g12(value).c_str(), nullptr);
}

std::string format_sig12(double value) {
    if (!std::isfinite(value)) return format_g12(value);
    if (value == 0.0) return "0";
    const double mag = std::floor(std::log10(std::fabs(value)));
    // digits after the decimal point so the total is 12 significant digits
    int decimals = 11 - static_cast<int>(mag);
    if (decimals < 0) decimals = 0;
    if (decimals > 40) decimals = 40;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        std::size_t last = s.find_last_not_of('0');
        if (s[last] == '.') last--;
        s.erase(last + 1);
    }
    return s;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace riskshare
