#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudx/models.hpp"

namespace fraudx::text_io {

inline void write_double(std::ostream& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  out.write(buf, ptr - buf);
}

inline void write_vector(std::ostream& out, std::span<const double> values) {
  out << values.size();
  for (const double v : values) {
    out << ' ';
    write_double(out, v);
  }
  out << '\n';
}

inline std::string read_token(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw ModelFormatError("unexpected end of model file");
  return token;
}

inline void expect(std::istream& in, std::string_view word) {
  const auto token = read_token(in);
  if (token != word) {
    throw ModelFormatError("model file: expected '" + std::string(word) + "', found '" + token +
                           "'");
  }
}

inline double read_double(std::istream& in) {
  const auto token = read_token(in);
  double v = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v, std::chars_format::hex);
  if (ec != std::errc() || ptr != end) throw ModelFormatError("model file: bad number '" + token + "'");
  return v;
}

inline long long read_integer(std::istream& in) {
  const auto token = read_token(in);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ModelFormatError("model file: bad integer '" + token + "'");
  }
  return v;
}

inline std::vector<double> read_vector(std::istream& in) {
  const auto n = read_integer(in);
  if (n < 0) throw ModelFormatError("model file: negative vector length");
  std::vector<double> values(static_cast<std::size_t>(n));
  for (auto& v : values) v = read_double(in);
  return values;
}

}  // namespace fraudx::text_io
