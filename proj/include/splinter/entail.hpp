#pragma once

#include <optional>

#include "splinter/program.hpp"
#include "splinter/sepformula.hpp"

namespace splinter {

enum class Rule {
  Empty,
  True,
  PointsTo,
  Star,
  Substitution,
  ExistsLeft,
  ExistsRight,
  NullNotLval,
  StarPartial,
  Fold,
  Unfold,
  Predicate,
  Inconsistent,
};

const char* ruleName(Rule r);

struct Sequent {
  SepFormula lhs, rhs;
};

// Explicit derivation. Instantiation data depends on the rule; lhsIds tracks
// the identity of antecedent heaplets across rewrites (parallel to
// conclusion.lhs.spatial) so abduction can colour the original heaplets.
struct ProofTree {
  Rule rule;
  Sequent conclusion;
  std::vector<ProofTree> premises;
  std::vector<int> lhsIds;

  // Substitution
  std::string substVar;
  bool substIsHeap = true;
  HeapTerm substHeap;
  DataTerm substData;
  // ExistsLeft: renamed bound variable
  std::string elOld, elNew;
  // ExistsRight: instantiated variable and witness
  std::string exVar;
  bool exIsHeap = true;
  HeapTerm exHeapWitness;
  DataTerm exDataWitness;
  // Fold / Unfold
  size_t atomIndex = 0;  // heaplet position in the conclusion (rhs for Fold,
                         // lhs for Unfold); also the leaf pair position
  int caseIndex = -1;    // Fold only
  // PointsTo/Predicate leaf: which original antecedent atom was consumed
  int consumedLhsId = -1;
  // Sep-mode wildcard data positions in a PointsTo leaf
  std::vector<size_t> wildDataPositions;

  size_t nodeCount() const {
    size_t n = 1;
    for (const auto& p : premises) n += p.nodeCount();
    return n;
  }
};

struct ProveOptions {
  int foldBudget = 2;       // fold/unfold applications per predicate occurrence
  size_t nodeCap = 20000;   // overall search effort cap
  bool restrictForColouring = false;  // only rules supported by colouring
  bool caseSplitUnfold = false;       // full case-split unfolds when stuck
};

struct ProveResult {
  enum class Status { Proved, Unknown } status = Status::Unknown;
  ProofTree tree;  // valid iff Proved
  bool ok() const { return status == Status::Proved; }
};

// Proof search for lhs |- rhs over the given predicate registry.
ProveResult prove(const PredRegistry& reg, const SepFormula& lhs,
                  const SepFormula& rhs, const ProveOptions& opt = {});

// --- Hoare triples ---------------------------------------------------------------

struct HoareStep {
  Command cmd;
  SepFormula pre, post;
  SepFormula exposedPre;     // pre with the accessed cell unfolded into view
  ProofTree exposure;        // pre |- exposedPre (identity-shaped when equal)
  bool exposureNeeded = false;
  SepFormula strongestPost;  // rule output from exposedPre
  ProofTree consequence;     // strongestPost |- post
};

struct HoareProof {
  std::vector<HoareStep> steps;  // consecutive steps share assertions
};

struct TripleResult {
  enum class Status { Valid, Unknown } status = Status::Unknown;
  HoareStep step;
  bool ok() const { return status == Status::Valid; }
};

// Validate {P} c {Q} by exposing the accessed cell, taking the rule's
// strongest post, and proving it against Q.
TripleResult checkTriple(const PredRegistry& reg, const SepFormula& pre,
                         const Command& c, const SepFormula& post,
                         const ProveOptions& opt = {});

// --- bounded countermodels ----------------------------------------------------------

struct BoundedModel {
  std::map<std::string, long> heapVars;  // 0 = null
  std::map<std::string, Rat> dataVars;
  std::map<long, std::pair<std::vector<Rat>, std::vector<long>>> cells;
  std::string show() const;
};

// Exhaustive search for a model of P and not Q over heaps of at most
// heapBound cells and data values drawn from the grid.
std::optional<BoundedModel> findCountermodel(const PredRegistry& reg,
                                             const SepFormula& p,
                                             const SepFormula& q, int heapBound,
                                             const std::vector<Rat>& grid);

// Bounded satisfaction itself (also the evaluator behind the oracle).
bool boundedSat(const PredRegistry& reg, const SepFormula& f,
                const BoundedModel& m);

// --- independent proof checking -------------------------------------------------------

struct CheckResult {
  bool ok = true;
  std::string reason;
};

// Re-validates every node's side conditions using only saturation and the
// linear-arithmetic engine; shares no code with the proof search.
CheckResult checkProofTree(const PredRegistry& reg, const ProofTree& t);
CheckResult checkHoareStep(const PredRegistry& reg, const HoareStep& s);

}  // namespace splinter
