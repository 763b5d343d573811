#pragma once

#include <cstdint>
#include <string>

namespace riskshare {

/// Plain-decimal representation with 12 significant digits (never scientific
/// notation). Used everywhere a table or panel cell is written to disk.
std::string format_sig12(double value);

/// %.12g style (scientific allowed); for JSON payloads where compactness wins.
std::string format_g12(double value);

/// Round a double to 12 significant digits (the value that format_g12 prints);
/// lets JSON hold numeric fields at the documented precision.
double round_sig12(double value);

/// CSV field quoting per RFC 4180: quote when the field contains a comma,
/// quote, or newline.
std::string csv_escape(const std::string& field);

/// FNV-1a 64-bit over a byte string; hex-encoded. Stable content hash for run
/// manifests and output stamping.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace riskshare
