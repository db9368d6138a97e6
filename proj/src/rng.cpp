#include "rfhydro/rng.hpp"

#include <cmath>

#include "rfhydro/types.hpp"

namespace rfhydro {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix(base);
  h = splitmix(h ^ a);
  h = splitmix(h ^ b);
  return splitmix(h ^ c);
}

std::uint64_t seed_from_string(const char* text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *text; ++text) {
    h ^= static_cast<unsigned char>(*text);
    h *= 0x100000001b3ULL;
  }
  return h;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  // Reject draws above the largest multiple of n.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

std::string_view to_string(Label label) {
  return label == Label::dehydrated ? "dehydrated" : "hydrated";
}

std::string_view to_string(Method method) { return method == Method::cbdm ? "CBDM" : "HBDM"; }

Label parse_label(std::string_view text) {
  if (text == "hydrated") return Label::hydrated;
  if (text == "dehydrated") return Label::dehydrated;
  throw ConfigError("unknown label '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
  if (text == "CBDM" || text == "cbdm") return Method::cbdm;
  if (text == "HBDM" || text == "hbdm") return Method::hbdm;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected CBDM or HBDM)");
}

}  // namespace rfhydro
