#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace coopsteer {

// Root of the shipped data files (instrument, templates, reference values).
// Resolution order: set_data_dir(), $COOPSTEER_DATA_DIR, the build-time default.
std::filesystem::path data_dir();
void set_data_dir(std::filesystem::path dir);

// Whole file as bytes. Throws std::runtime_error if unreadable.
std::string read_file(const std::filesystem::path& path);
// Same, minus a single trailing '\n' if present.
std::string read_text_file(const std::filesystem::path& path);

// Replaces every {{KEY}}. Throws std::invalid_argument on a placeholder with
// no value, so a rendered prompt can never carry an unfilled slot.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values);

// Fixed-point, round-half-even on the value rounded to 12 decimals, so
// 3.15 -> "3.2" and 3.25 -> "3.2". At most 12 decimals.
std::string format_fixed(double value, int decimals);

std::string sha256_hex(std::string_view bytes);

}  // namespace coopsteer
