#include "kc/bn.hpp"

#include <cmath>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace kc {

using nlohmann::json;

BayesNet::BayesNet(std::vector<std::string> names, std::vector<std::vector<std::size_t>> parents,
                   std::vector<Cpt> cpts)
    : names_(std::move(names)), parents_(std::move(parents)), cpts_(std::move(cpts)) {
  const std::size_t n = names_.size();
  if (parents_.size() != n || cpts_.size() != n)
    throw std::invalid_argument("network needs one parent list and one CPT per variable");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (names_[i] == names_[j]) throw std::invalid_argument("duplicate variable name `" + names_[i] + "`");
    for (std::size_t p : parents_[i])
      if (p >= n || p == i) throw std::invalid_argument("bad parent index for `" + names_[i] + "`");
    if (parents_[i].size() > 20) throw std::invalid_argument("too many parents for `" + names_[i] + "`");
    if (cpts_[i].rows.size() != (std::size_t{1} << parents_[i].size()))
      throw std::invalid_argument("CPT of `" + names_[i] + "` needs " +
                                  std::to_string(std::size_t{1} << parents_[i].size()) + " rows");
    for (auto [t, f] : cpts_[i].rows) {
      if (!(t >= 0 && t <= 1 && f >= 0 && f <= 1)) throw std::invalid_argument("CPT entry outside [0,1] for `" + names_[i] + "`");
      if (std::abs(t + f - 1.0) > 1e-12) throw std::invalid_argument("CPT row of `" + names_[i] + "` does not sum to 1");
    }
  }
  // Kahn's algorithm, lowest index first.
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p : parents_[i]) {
      ++indegree[i];
      children[p].push_back(i);
    }
  std::vector<char> done(n, 0);
  while (topo_.size() < n) {
    std::size_t next = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && indegree[i] == 0) {
        next = i;
        break;
      }
    if (next == n) throw std::invalid_argument("parent graph has a cycle");
    done[next] = 1;
    topo_.push_back(next);
    for (std::size_t c : children[next]) --indegree[c];
  }
}

std::size_t BayesNet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw std::invalid_argument("unknown network variable `" + std::string(name) + "`");
}

std::size_t BayesNet::row_index(std::size_t i, const std::vector<bool>& x) const {
  std::size_t row = 0;
  for (std::size_t p : parents_.at(i)) row = (row << 1) | (x.at(p) ? 1U : 0U);
  return row;
}

// --- JSON -----------------------------------------------------------------------

namespace {

BayesNet from_json(const json& j) {
  if (!j.is_object() || !j.contains("variables") || !j.contains("cpt"))
    throw ParseError("network JSON needs `variables` and `cpt`");
  auto names = j.at("variables").get<std::vector<std::string>>();
  const std::size_t n = names.size();
  auto index = [&](const json& v) -> std::size_t {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    auto s = v.get<std::string>();
    for (std::size_t i = 0; i < n; ++i)
      if (names[i] == s) return i;
    throw ParseError("unknown variable `" + s + "` in network JSON");
  };
  // Either an object keyed by name or an array aligned with `variables`.
  auto per_variable = [&](const json& field, std::size_t i) -> const json* {
    if (field.is_object()) return field.contains(names[i]) ? &field.at(names[i]) : nullptr;
    if (field.is_array()) return i < field.size() ? &field.at(i) : nullptr;
    throw ParseError("expected an object or array in network JSON");
  };
  std::vector<std::vector<std::size_t>> parents(n);
  std::vector<BayesNet::Cpt> cpts(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (j.contains("parents"))
      if (const json* ps = per_variable(j.at("parents"), i))
        for (const auto& p : *ps) parents[i].push_back(index(p));
    const json* rows = per_variable(j.at("cpt"), i);
    if (!rows) throw ParseError("missing CPT for `" + names[i] + "`");
    for (const auto& row : *rows) {
      if (!row.is_array() || row.size() != 2) throw ParseError("CPT rows of `" + names[i] + "` must be [theta, 1-theta] pairs (binary variables only)");
      cpts[i].rows.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    }
  }
  try {
    return BayesNet(std::move(names), std::move(parents), std::move(cpts));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

}  // namespace

BayesNet parse_bayes_net(std::istream& in) {
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError(std::string("network JSON: ") + e.what());
  }
}

BayesNet parse_bayes_net_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_bayes_net(in);
}

std::string to_bayes_net_json(const BayesNet& bn) {
  json j;
  j["variables"] = json::array();
  j["parents"] = json::object();
  j["cpt"] = json::object();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    j["variables"].push_back(bn.name(i));
    json ps = json::array();
    for (std::size_t p : bn.parents(i)) ps.push_back(bn.name(p));
    j["parents"][bn.name(i)] = ps;
    json rows = json::array();
    for (auto [t, f] : bn.cpt(i).rows) rows.push_back({t, f});
    j["cpt"][bn.name(i)] = rows;
  }
  return j.dump(2);
}

// --- encoding -------------------------------------------------------------------

BnEncoding encode(const BayesNet& bn) {
  BnEncoding enc;
  const std::size_t n = bn.size();
  for (std::size_t i = 0; i < n; ++i) enc.indicator_of.push_back(static_cast<Var>(i + 1));
  for (std::size_t i : bn.topological_order()) {
    for (std::size_t row = 0; row < bn.cpt(i).rows.size(); ++row)
      for (bool positive : {true, false}) enc.parameters.push_back({i, row, positive});
  }
  enc.cnf.var_count = static_cast<Var>(n + enc.parameters.size());
  enc.weights = WeightMap(enc.cnf.var_count);
  for (std::size_t k = 0; k < enc.parameters.size(); ++k) {
    const auto& prm = enc.parameters[k];
    const auto& ps = bn.parents(prm.variable);
    Var pv = enc.parameter_var(k);
    // (x and u) <=> P
    std::vector<Literal> lhs{Literal(enc.indicator_of[prm.variable], prm.positive)};
    for (std::size_t j = 0; j < ps.size(); ++j) {
      bool value = (prm.row >> (ps.size() - 1 - j)) & 1U;
      lhs.emplace_back(enc.indicator_of[ps[j]], value);
    }
    Clause forward;
    for (Literal l : lhs) forward.push_back(~l);
    forward.emplace_back(pv, true);
    enc.cnf.clauses.push_back(forward);
    for (Literal l : lhs) enc.cnf.clauses.push_back({Literal(pv, false), l});
    auto [t, f] = bn.cpt(prm.variable).rows[prm.row];
    enc.weights.set(Literal(pv, true), prm.positive ? t : f);
  }
  return enc;
}

std::vector<double> joint_brute_force(const BayesNet& bn) {
  const std::size_t n = bn.size();
  if (n > 20) throw CapacityError("brute-force joint limited to 20 network variables");
  std::vector<double> joint(std::size_t{1} << n);
  std::vector<bool> x(n);
  for (std::size_t b = 0; b < joint.size(); ++b) {
    for (std::size_t i = 0; i < n; ++i) x[i] = (b >> i) & 1U;
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto [t, f] = bn.cpt(i).rows[bn.row_index(i, x)];
      p *= x[i] ? t : f;
    }
    joint[b] = p;
  }
  return joint;
}

// --- queries --------------------------------------------------------------------

namespace {

bool consistent(const Evidence& a, const Evidence& b) {
  for (auto [v, value] : a)
    if (auto it = b.find(v); it != b.end() && it->second != value) return false;
  return true;
}

Evidence merged(const Evidence& a, const Evidence& b) {
  Evidence out = a;
  out.insert(b.begin(), b.end());
  return out;
}

void check_indices(const Evidence& e, std::size_t n) {
  for (auto [v, value] : e)
    if (v >= n) throw std::invalid_argument("network variable index " + std::to_string(v) + " out of range");
}

bool compatible(std::size_t bits, const Evidence& e) {
  for (auto [v, value] : e)
    if ((((bits >> v) & 1U) != 0) != value) return false;
  return true;
}

std::vector<Var> compile_order(const BayesNet& bn, const BnEncoding& enc) {
  std::vector<std::vector<Var>> params_of(bn.size());
  for (std::size_t k = 0; k < enc.parameters.size(); ++k) params_of[enc.parameters[k].variable].push_back(enc.parameter_var(k));
  std::vector<Var> order;
  for (std::size_t i : bn.topological_order()) {
    order.push_back(enc.indicator_of[i]);
    order.insert(order.end(), params_of[i].begin(), params_of[i].end());
  }
  return order;
}

}  // namespace

CompiledNetwork::CompiledNetwork(const BayesNet& bn, BnVtree shape) : network_size_(bn.size()), enc_(encode(bn)) {
  if (bn.size() == 0) {
    circuit_ = NnfCircuit(0);
    circuit_.set_root(circuit_.add_true());
    return;
  }
  auto order = compile_order(bn, enc_);
  SddManager m(shape == BnVtree::Balanced ? Vtree::balanced(order) : Vtree::right_linear(order));
  SddId root = m.compile_cnf(enc_.cnf);
  sdd_size_ = m.size(root);
  circuit_ = smooth(m.to_nnf(root));
}

WeightMap CompiledNetwork::restricted(const Evidence& e) const {
  check_indices(e, network_size_);
  Term t(enc_.cnf.var_count);
  for (auto [v, value] : e) t.set(enc_.indicator_of[v], value);
  return enc_.weights.restricted(t);
}

double CompiledNetwork::probability(const Evidence& evidence) const { return wmc(circuit_, restricted(evidence)); }

double CompiledNetwork::marginal(const Query& q) const {
  double pe = probability(q.evidence);
  if (pe <= 0) throw ZeroProbabilityError("evidence has probability zero");
  if (!consistent(q.target, q.evidence)) return 0.0;
  return probability(merged(q.target, q.evidence)) / pe;
}

Mpe CompiledNetwork::mpe(const Evidence& evidence) const {
  if (probability(evidence) <= 0) throw ZeroProbabilityError("evidence has probability zero");
  WeightedModel best = max_weight_model(circuit_, restricted(evidence));
  Mpe out{Instantiation(network_size_), best.weight};
  for (std::size_t i = 0; i < network_size_; ++i) out.state[i] = best.model.at(enc_.indicator_of[i]);
  return out;
}

double query_marginal(const BayesNet& bn, const Query& q, BnBackend backend) {
  if (backend == BnBackend::CompileSdd) return CompiledNetwork(bn).marginal(q);
  check_indices(q.target, bn.size());
  check_indices(q.evidence, bn.size());
  auto joint = joint_brute_force(bn);
  double pe = 0, pt = 0;
  for (std::size_t b = 0; b < joint.size(); ++b) {
    if (!compatible(b, q.evidence)) continue;
    pe += joint[b];
    if (compatible(b, q.target)) pt += joint[b];
  }
  if (pe <= 0) throw ZeroProbabilityError("evidence has probability zero");
  return pt / pe;
}

Mpe query_mpe(const BayesNet& bn, const Evidence& evidence, BnBackend backend) {
  if (backend == BnBackend::CompileSdd) return CompiledNetwork(bn).mpe(evidence);
  check_indices(evidence, bn.size());
  auto joint = joint_brute_force(bn);
  std::size_t best = joint.size();
  for (std::size_t b = 0; b < joint.size(); ++b)
    if (compatible(b, evidence) && joint[b] > 0 && (best == joint.size() || joint[b] > joint[best])) best = b;
  if (best == joint.size()) throw ZeroProbabilityError("evidence has probability zero");
  Mpe out{Instantiation(bn.size()), joint[best]};
  for (std::size_t i = 0; i < bn.size(); ++i) out.state[i] = (best >> i) & 1U;
  return out;
}

std::string query_record_json(const BayesNet& bn, const Query& q, double probability) {
  auto named = [&](const Evidence& e) {
    json o = json::object();
    for (auto [v, value] : e) o[bn.name(v)] = value;
    return o;
  };
  json j;
  j["target"] = named(q.target);
  j["evidence"] = named(q.evidence);
  j["probability"] = probability;
  return j.dump();
}

}  // namespace kc
