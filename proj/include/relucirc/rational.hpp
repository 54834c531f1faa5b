#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <string_view>

namespace relucirc {

// mpq_class keeps values canonical (lowest terms, positive denominator)
// after every arithmetic operation.
using Rational = mpq_class;

struct RationalParse {
  std::optional<Rational> value;
  std::string error;
};

inline RationalParse parse_rational(std::string_view s) {
  auto digits = [](std::string_view t, bool allow_sign) {
    if (t.empty()) return false;
    std::size_t i = 0;
    if (allow_sign && (t[0] == '-' || t[0] == '+')) i = 1;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (t[i] < '0' || t[i] > '9') return false;
    return true;
  };
  auto slash = s.find('/');
  std::string_view num = s.substr(0, slash);
  std::string_view den = slash == std::string_view::npos ? std::string_view("1") : s.substr(slash + 1);
  if (!digits(num, true) || !digits(den, false))
    return {std::nullopt, "malformed rational '" + std::string(s) + "'"};
  std::string n(num);
  if (!n.empty() && n[0] == '+') n.erase(0, 1);
  mpz_class zn(n, 10), zd(std::string(den), 10);
  if (zd == 0) return {std::nullopt, "zero denominator in '" + std::string(s) + "'"};
  Rational r(zn, zd);
  r.canonicalize();
  return {r, {}};
}

inline std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline int sign(const Rational& r) { return sgn(r); }

}  // namespace relucirc
