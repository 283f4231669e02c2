#include "ecrv/proof.hpp"

#include "ecrv/model.hpp"

namespace ecrv {

ProofPtr MakeProof(std::string rule, Term goal, std::vector<ProofPtr> children, bool negated) {
  auto p = std::make_shared<ProofNode>();
  p->rule = std::move(rule);
  p->goal = std::move(goal);
  p->negated = negated;
  p->children = std::move(children);
  return p;
}

nlohmann::json ProofToJson(const ProofNode& p) {
  nlohmann::json j;
  j["rule"] = p.rule;
  j["goal"] = ToString(p.goal);
  if (p.negated) j["negated"] = true;
  nlohmann::json kids = nlohmann::json::array();
  for (const auto& c : p.children) kids.push_back(ProofToJson(*c));
  j["children"] = std::move(kids);
  return j;
}

ProofPtr ProofFromJson(const nlohmann::json& j) {
  auto p = std::make_shared<ProofNode>();
  p->rule = j.at("rule").get<std::string>();
  p->goal = ParseTerm(j.at("goal").get<std::string>());
  p->negated = j.value("negated", false);
  if (j.contains("children")) {
    for (const auto& c : j.at("children")) p->children.push_back(ProofFromJson(c));
  }
  return p;
}

std::string ProofToText(const ProofNode& p, int indent) {
  std::string out(static_cast<size_t>(indent) * 2, ' ');
  if (p.negated) out += "not ";
  out += ToString(p.goal);
  out += "  [" + p.rule + "]\n";
  for (const auto& c : p.children) out += ProofToText(*c, indent + 1);
  return out;
}

size_t ProofSize(const ProofNode& p) {
  size_t n = 1;
  for (const auto& c : p.children) n += ProofSize(*c);
  return n;
}

}  // namespace ecrv
