#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "splinter/sepformula.hpp"

namespace splinter {

// The eight command forms carried by CFG edges. nondet() assignments are
// havoc commands: the target receives an unconstrained fresh value.
struct CmdAssignHeap {
  std::string lhs;
  HeapTerm rhs;
};
struct CmdAssignData {
  std::string lhs;
  DataTerm rhs;
};
struct CmdHavoc {
  std::string lhs;  // data variable
};
struct CmdHeapStore {
  std::string obj;
  int field;
  HeapTerm value;
};
struct CmdHeapLoad {
  std::string lhs;
  std::string obj;
  int field;
};
struct CmdDataStore {
  std::string obj;
  int field;
  DataTerm value;
};
struct CmdDataLoad {
  std::string lhs;
  std::string obj;
  int field;
};
struct CmdAlloc {
  std::string lhs;
  int ndata, nsucc;
};
struct CmdFree {
  std::string obj;
};
struct CmdAssume {
  Pure cond;  // heap (dis)equalities plus a data formula; no applications
};

using Command =
    std::variant<CmdAssignHeap, CmdAssignData, CmdHavoc, CmdHeapStore,
                 CmdHeapLoad, CmdDataStore, CmdDataLoad, CmdAlloc, CmdFree,
                 CmdAssume>;

std::string showCommand(const Command& c);

struct Edge {
  int from, to;
  Command cmd;
};

struct Program {
  int nodeCount = 0;
  int entry = 0;
  int error = 0;
  int ndata = 1, nsucc = 1;  // global record shape
  std::vector<Edge> edges;
  std::map<std::string, VarKind> decls;
  std::map<std::string, int> labels;  // source label -> node
  std::vector<std::string> warnings;  // pruning notes

  std::vector<int> outEdges(int v) const {  // deterministic source order
    std::vector<int> out;
    for (size_t i = 0; i < edges.size(); ++i)
      if (edges[i].from == v) out.push_back(static_cast<int>(i));
    return out;
  }
  std::vector<std::string> dataVars() const {
    std::vector<std::string> out;
    for (const auto& [v, k] : decls)
      if (k == VarKind::Data) out.push_back(v);
    return out;
  }
};

// A path is a chained edge sequence starting at the entry node.
struct Path {
  const Program* prog = nullptr;
  std::vector<int> edgeIds;

  bool endsAtError() const {
    return prog && !edgeIds.empty() &&
           prog->edges[edgeIds.back()].to == prog->error;
  }
  const Command& cmd(size_t i) const { return prog->edges[edgeIds[i]].cmd; }
  size_t size() const { return edgeIds.size(); }
  std::vector<int> nodeSeq() const {
    std::vector<int> ns;
    if (!prog) return ns;
    ns.push_back(edgeIds.empty() ? prog->entry : prog->edges[edgeIds[0]].from);
    for (int e : edgeIds) ns.push_back(prog->edges[e].to);
    return ns;
  }
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& w) : std::runtime_error(w) {}
};

struct ParseOptions {
  bool allowMultiShape = false;  // permit new(n,m) differing from the header
  bool prune = true;             // drop nodes off every entry-to-error path
};

// Parse the structured surface language (.spl) or the flat cfg form emitted
// by printProgram. Grammar in docs/language.md.
Program parseProgram(const std::string& text, const ParseOptions& opt = {});

// Deterministic flat serialization; parseProgram accepts its output.
std::string printProgram(const Program& p);

// Reference interpreter for the structured source, used by tests to check
// that lowering preserves concrete semantics. Returns the trace of node-less
// observations: final data variable values plus a status string
// ("ok" | "error" | "memfault" | "fuel").
struct SourceRun {
  std::string status;
  std::map<std::string, Rat> finalData;
};
SourceRun interpretSource(const std::string& text, const std::vector<Rat>& inputs,
                          int fuel = 10000);

}  // namespace splinter
