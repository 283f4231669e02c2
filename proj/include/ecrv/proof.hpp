// Proof trees returned with every answer.
//
// A node concludes `goal` by `rule`. Rule names:
//   narrative, triggered, initiallyP, fact, constraint   leaves (triggered has
//                                                        the trigger proof)
//   clause:<id>                                          model clause instance
//   holds_initially, holds_initiated                     boolean holdsAt
//   value_initially, value_initiated, value_trajectory,
//   value_snapshot                                       functional holdsAt
//   not_clipped, not_stopped, not_clipped_value, not     negation nodes
//   checkpoint, cached                                   reuse of an earlier
//                                                        derivation

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecrv/term.hpp"

namespace ecrv {

struct ProofNode;
using ProofPtr = std::shared_ptr<const ProofNode>;

struct ProofNode {
  std::string rule;
  Term goal;
  bool negated = false;
  std::vector<ProofPtr> children;
};

ProofPtr MakeProof(std::string rule, Term goal, std::vector<ProofPtr> children = {},
                   bool negated = false);

nlohmann::json ProofToJson(const ProofNode& p);
// Parses the JSON form back. Goals are re-read with the term parser, so
// variable identities are not preserved; intended for display only.
ProofPtr ProofFromJson(const nlohmann::json& j);
// Indented text, one node per line: `goal  [rule]`.
std::string ProofToText(const ProofNode& p, int indent = 0);

size_t ProofSize(const ProofNode& p);

}  // namespace ecrv
