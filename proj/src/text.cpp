#include "coopsteer/text.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

#ifndef COOPSTEER_DEFAULT_DATA_DIR
#define COOPSTEER_DEFAULT_DATA_DIR "data"
#endif

namespace coopsteer {

namespace {
std::mutex g_data_dir_mutex;
std::filesystem::path g_data_dir_override;
}  // namespace

std::filesystem::path data_dir() {
  std::lock_guard lock(g_data_dir_mutex);
  if (!g_data_dir_override.empty()) return g_data_dir_override;
  if (const char* env = std::getenv("COOPSTEER_DATA_DIR"); env && *env) return env;
  return COOPSTEER_DEFAULT_DATA_DIR;
}

void set_data_dir(std::filesystem::path dir) {
  std::lock_guard lock(g_data_dir_mutex);
  g_data_dir_override = std::move(dir);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::string text = read_file(path);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw std::invalid_argument("unterminated placeholder in template");
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string key(tmpl.substr(open + 2, close - open - 2));
    const auto it = values.find(key);
    if (it == values.end()) throw std::invalid_argument("no value for placeholder {{" + key + "}}");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

std::string format_fixed(double value, int decimals) {
  if (decimals < 0 || decimals > 12) throw std::invalid_argument("decimals must be in [0, 12]");
  if (!std::isfinite(value)) return std::to_string(value);
  // Snap to 12 decimals so ties are judged on the decimal value (3.15 is a
  // tie even though its binary value sits just below it).
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", std::fabs(value));
  std::string digits(buf);
  const auto dot = digits.find('.');
  std::string whole = digits.substr(0, dot);
  std::string frac = digits.substr(dot + 1);

  std::string kept = whole + frac.substr(0, decimals);
  const char next = frac[decimals];
  const bool rest_nonzero = frac.find_first_not_of('0', decimals + 1) != std::string::npos;
  const bool odd = (kept.back() - '0') % 2 == 1;
  if (next > '5' || (next == '5' && (rest_nonzero || odd))) {
    int i = static_cast<int>(kept.size()) - 1;
    while (i >= 0 && kept[i] == '9') kept[i--] = '0';
    if (i < 0) {
      kept.insert(kept.begin(), '1');
    } else {
      ++kept[i];
    }
  }
  const auto int_len = kept.size() - decimals;
  std::string out = kept.substr(0, int_len);
  if (decimals > 0) out += "." + kept.substr(int_len);
  if (value < 0 && out.find_first_not_of("0.") != std::string::npos) out.insert(out.begin(), '-');
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace coopsteer
