#pragma once

#include <optional>

#include "splinter/program.hpp"
#include "splinter/sepformula.hpp"

namespace splinter {

// Symbolic heaps are SepFormulas whose spatial part contains points-to
// heaplets only and whose pure part is a conjunction; data equalities are
// tracked through execution so the same sequences also drive constraint
// generation.

// Strongest-post symbolic execution of one command. nullopt = undefined
// (no provably matching cell for a heap access).
std::optional<SepFormula> execCmd(const Command& c, const SepFormula& s);

struct ExecSeq {
  size_t k = 0;                    // longest defined prefix length
  std::vector<SepFormula> states;  // S_0 .. S_k
};
ExecSeq execPath(const Path& pi);

// The cell index of s.spatial provably equal to variable x, if any.
std::optional<size_t> findCell(const SepFormula& s, const std::string& x);

// --- concrete interpreter ------------------------------------------------------

struct ConcreteState {
  std::map<std::string, Rat> data;
  std::map<std::string, long> heapVars;  // 0 = null
  std::map<long, std::pair<std::vector<Rat>, std::vector<long>>> cells;
  long nextLoc = 1;
};

struct ConcreteRun {
  enum class Status { Ok, MemFault, AssumeFail } status = Status::Ok;
  size_t step = 0;  // faulting / failing command index (when not Ok)
  ConcreteState state;
};

// Small-step run over a path; `inputs` supplies havoc values in order.
ConcreteRun runConcrete(const Path& pi, const std::vector<Rat>& inputs);

// One command against a mutable state; inputPos walks the havoc inputs.
ConcreteRun::Status stepConcrete(const Command& c, ConcreteState& st,
                                 const std::vector<Rat>& inputs,
                                 size_t& inputPos);

bool evalPure(const Pure& cond, const ConcreteState& st);

}  // namespace splinter
