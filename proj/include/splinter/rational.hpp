#pragma once

#include <gmpxx.h>
#include <string>
#include <stdexcept>

namespace splinter {

// Exact arbitrary-precision rational. All arithmetic in the artifact is
// carried out over these; no floating point anywhere.
using Rat = mpq_class;

inline Rat ratOf(long n, long d = 1) {
  Rat r(n, d);
  r.canonicalize();
  return r;
}

// Accepts "3", "-7/2", "0".
inline Rat parseRat(const std::string& s) {
  Rat r;
  if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  r.canonicalize();
  return r;
}

inline std::string showRat(const Rat& r) { return r.get_str(); }

}  // namespace splinter
