#pragma once

#include <string>

#include "splinter/sepformula.hpp"

namespace splinter {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string& msg, int l, int c)
      : std::runtime_error(msg + " at " + std::to_string(l) + ":" +
                           std::to_string(c)),
        line(l),
        col(c) {}
};

// Formula grammar (see docs/language.md):
//   [exists v1, v2 .] <pure> : <spatial>
//   pure    := conj of: E == F | E != F | data comparisons | R(args) | true
//   spatial := emp | heaplet (* heaplet)*
//   heaplet := true | E |-> [A1, ...; F1, ...] | Z(refs; args)
//   ref     := NAME | lam a, b. <refined conjunction>
// Variable kinds are inferred from positions; == / != between bare names
// default to heap equalities unless a side is arithmetic.
SepFormula parseFormula(const std::string& text);

// Predicate definition file:
//   pred ls(R/1; x, y) := (x == y : emp)
//                       | (exists d, n. x != y && R(d) : x |-> [d; n] * ls(R; n, y));
PredRegistry parsePredDefs(const std::string& text);
void addPredDefs(PredRegistry& reg, const std::string& text);

// Parse a data formula on its own (used by the Horn clause text format).
DataFormula parseDataFormula(const std::string& text);

}  // namespace splinter
