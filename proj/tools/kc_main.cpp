#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kc/bn.hpp"
#include "kc/cnf.hpp"
#include "kc/nnf.hpp"
#include "kc/psdd.hpp"
#include "kc/sdd.hpp"
#include "kc/spaces.hpp"
#include "kc/vtree.hpp"
#include "kc/xai.hpp"

using namespace kc;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "kc 1.0.0";

constexpr const char* kFormats = R"(File formats

CNF (DIMACS)   `p cnf V C`, then clauses of nonzero literals ended by 0; `c` lines are comments.
Weights        one `<literal> <weight>` per line, e.g. `-3 0.25`; unlisted literals weigh 1.0.
NNF (c2d)      `nnf N E V`, then `L lit`, `A k c1..ck`, `O j k c1..ck`; children precede parents, last node is the root.
Vtree          `vtree N`, then `L id var` and `I id left right`; ids are in-order positions, children first.
SDD            `sdd N`, then `F id`, `T id`, `L id vtree lit`, `D id vtree k p1 s1 ...`; last node is the root.
PSDD           `psdd N`, node lines `L id vtree lit`, `T id vtree var`, `D id vtree k p1 s1 ...`,
               then `P id 0 w0 1 w1 ...` parameter lines. Stored next to `<file>.vtree`.
Dataset (CSV)  header of variable names (column i is variable i+1), 0/1 cells, optional `count` column.
Bayes net      JSON {"variables": [...], "parents": {"B": ["A"]}, "cpt": {"A": [[0.3, 0.7]], "B": [[t, f], ...]}};
               CPT rows count parent states in binary, first parent most significant, true = 1.
Graph          `V E`, then one `u v` line per edge with 0-based endpoints; edge i is CNF variable i+1.
Naive Bayes    JSON {"prior", "threshold", "features": [{"name", "pos_likelihood", "neg_likelihood"}], "protected": [...]}.
Forest         JSON {"features": [...], "trees": [node, ...], "protected": [...]};
               a node is true, false or {"feature": name, "low": node, "high": node}.
Vtree specs    right-linear | balanced | random:SEED | constrained:V1,V2,... | path to a vtree file.
Instances      feature names separated by spaces or commas, `~name` for false (explain, robust);
               DIMACS literals such as `1 -2 3` (psdd); `A`, `~A`, `A=0`, `A=1` (bn).
Exit codes     0 success, 2 usage, 3 input format, 4 semantic, 5 capacity.
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open `" + path + "`");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write `" + path + "`");
  out << text;
}

std::string number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

Var parse_var(const std::string& tok) {
  Var v = 0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || v == 0)
    throw std::invalid_argument("bad variable `" + tok + "`");
  return v;
}

/// DIMACS literals such as "1 -2 3".
Term parse_literals(const std::string& s, Var n) {
  Term t(n);
  for (const auto& tok : split_list(s)) {
    bool positive = tok[0] != '-';
    Var v = parse_var(positive ? tok : tok.substr(1));
    if (v > n) throw std::invalid_argument("variable " + std::to_string(v) + " out of range");
    if (t.bound(v) && t.at(v) != positive) throw std::invalid_argument("variable " + std::to_string(v) + " given both values");
    t.set(v, positive);
  }
  return t;
}

json literals_json(const Term& t) {
  json out = json::array();
  for (Literal l : t.literals()) out.push_back(l.dimacs());
  return out;
}

std::string first_token(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c") continue;
    return tok;
  }
  return {};
}

std::vector<Var> vars_of(Var n) {
  std::vector<Var> out;
  for (Var v = 1; v <= n; ++v) out.push_back(v);
  return out;
}

Vtree vtree_from_spec(const std::string& spec, Var n) {
  if (n == 0) throw std::invalid_argument("a vtree needs at least one variable");
  if (spec == "right-linear") return Vtree::right_linear(vars_of(n));
  if (spec == "balanced") return Vtree::balanced(vars_of(n));
  if (spec.rfind("random:", 0) == 0) {
    std::uint64_t seed = 0;
    const std::string s = spec.substr(7);
    auto r = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad seed in `" + spec + "`");
    return Vtree::random(vars_of(n), seed);
  }
  if (spec.rfind("constrained:", 0) == 0) {
    std::vector<Var> x, y;
    for (const auto& tok : split_list(spec.substr(12))) x.push_back(parse_var(tok));
    for (Var v = 1; v <= n; ++v)
      if (std::find(x.begin(), x.end(), v) == x.end()) y.push_back(v);
    return Vtree::constrained(x, y);
  }
  Vtree v = parse_vtree_string(read_file(spec));
  for (Var u = 1; u <= n; ++u)
    if (!v.has_var(u)) throw std::invalid_argument("vtree file does not cover variable " + std::to_string(u));
  return v;
}

Cnf load_cnf(const std::string& path) { return parse_dimacs_string(read_file(path)); }

WeightMap load_weights(const std::string& path, Var n) {
  if (path.empty()) return WeightMap(n);
  std::istringstream in(read_file(path));
  return parse_weights(in, n);
}

/// A compiled circuit from a CNF, c2d NNF or SDD file, as a smooth d-DNNF.
NnfCircuit load_circuit(const std::string& path, const std::string& vtree_spec, bool check) {
  const std::string text = read_file(path);
  const std::string head = first_token(text);
  if (head == "nnf") {
    NnfCircuit c = parse_c2d_nnf_string(text);
    if (check) {
      if (auto v = check_decomposability(c))
        throw PropertyViolation("and-node " + std::to_string(v->node) + " shares variable " + std::to_string(v->shared));
      if (auto v = check_determinism_exhaustive(c))
        throw PropertyViolation("or-node " + std::to_string(v->node) + " is not deterministic");
    }
    return smooth(c);
  }
  if (head == "sdd") {
    if (vtree_spec.empty() || vtree_spec.find(':') != std::string::npos || vtree_spec == "balanced" ||
        vtree_spec == "right-linear")
      throw std::invalid_argument("an SDD file needs --vtree <vtree file>");
    SddManager m(parse_vtree_string(read_file(vtree_spec)));
    SddId root = read_sdd_string(text, m);
    NnfCircuit c = smooth(m.to_nnf(root));
    c.set_var_count(m.var_count());
    return c;
  }
  Cnf cnf = parse_dimacs_string(text);
  if (cnf.var_count == 0) {
    NnfCircuit c(0);
    c.set_root(cnf.clauses.empty() ? c.add_true() : c.add_false());
    return c;
  }
  SddManager m(vtree_from_spec(vtree_spec.empty() ? "balanced" : vtree_spec, cnf.var_count));
  NnfCircuit c = smooth(m.to_nnf(m.compile_cnf(cnf)));
  c.set_var_count(cnf.var_count);
  return c;
}

// --- Bayesian networks ----------------------------------------------------------

Evidence parse_evidence(const std::string& s, const BayesNet& bn) {
  Evidence e;
  for (auto tok : split_list(s)) {
    bool value = true;
    if (auto eq = tok.find('='); eq != std::string::npos) {
      std::string v = tok.substr(eq + 1);
      if (v == "1" || v == "true")
        value = true;
      else if (v == "0" || v == "false")
        value = false;
      else
        throw std::invalid_argument("bad value in `" + tok + "`");
      tok = tok.substr(0, eq);
    }
    while (!tok.empty() && (tok[0] == '~' || tok[0] == '!')) {
      value = !value;
      tok.erase(0, 1);
    }
    std::size_t i = bn.index_of(tok);
    if (e.count(i) && e[i] != value) throw std::invalid_argument("variable `" + tok + "` given both values");
    e[i] = value;
  }
  return e;
}

BnVtree bn_vtree(const std::string& s) {
  if (s == "balanced") return BnVtree::Balanced;
  if (s == "right-linear") return BnVtree::RightLinear;
  throw std::invalid_argument("bn vtree must be balanced or right-linear");
}

// --- PSDD files -----------------------------------------------------------------

std::string vtree_path_for(const std::string& model, const std::string& given) {
  return given.empty() ? model + ".vtree" : given;
}

Psdd load_psdd(const std::string& model, const std::string& vtree) {
  Vtree v = parse_vtree_string(read_file(vtree_path_for(model, vtree)));
  return read_psdd_string(read_file(model), std::move(v));
}

// --- classifiers ----------------------------------------------------------------

struct LoadedModel {
  DecisionFunction f;
  std::vector<std::string> protected_features;
};

LoadedModel load_model(const std::string& path, const std::string& names, const std::string& order) {
  const std::string text = read_file(path);
  std::size_t start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(std::string("model JSON: ") + e.what());
    }
    if (j.contains("trees")) {
      DecisionForest forest = parse_forest_string(text);
      return {compile_forest(forest), forest.protected_features};
    }
    NaiveBayes nb = parse_naive_bayes_string(text);
    std::vector<std::size_t> idx;
    for (const auto& tok : split_list(order)) {
      auto names_nb = nb.names();
      auto it = std::find(names_nb.begin(), names_nb.end(), tok);
      if (it == names_nb.end()) throw std::invalid_argument("unknown feature `" + tok + "` in --order");
      idx.push_back(static_cast<std::size_t>(it - names_nb.begin()));
    }
    return {compile_nb(nb, idx), nb.protected_features};
  }
  Cnf cnf = parse_dimacs_string(text);
  return {function_from_cnf(cnf, split_list(names)), {}};
}

std::vector<Var> protected_vars(const DecisionFunction& f, const std::vector<std::string>& names) {
  std::vector<Var> out;
  for (const auto& n : names) out.push_back(f.var_of(n));
  return out;
}

json robustness_json(const std::optional<unsigned>& r) { return r ? json(*r) : json("unbounded"); }

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return 3;
  if (dynamic_cast<const CapacityError*>(&e)) return 5;
  if (dynamic_cast<const SemanticError*>(&e) || dynamic_cast<const PropertyViolation*>(&e)) return 4;
  if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::out_of_range*>(&e)) return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge compilation toolkit: compile, count, query, learn and explain."};
  app.require_subcommand(0, 1);
  bool show_version = false, show_formats = false;
  app.add_flag("--version", show_version, "Print the version");
  app.add_flag("--formats", show_formats, "Describe the file formats");

  // compile
  auto* compile = app.add_subcommand("compile", "Compile a CNF into an SDD");
  std::string c_cnf, c_vtree = "balanced", c_out, c_vtree_out, c_nnf_out;
  bool c_count = false, c_timing = false;
  compile->add_option("cnf", c_cnf, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
  compile->add_option("--vtree", c_vtree, "Vtree spec");
  compile->add_option("-o,--out", c_out, "Write the SDD here");
  compile->add_option("--vtree-out", c_vtree_out, "Write the vtree here");
  compile->add_option("--nnf-out", c_nnf_out, "Write the circuit in c2d format here");
  compile->add_flag("--count", c_count, "Include the model count");
  compile->add_flag("--timing", c_timing, "Include the compile time in milliseconds");

  // count / wmc
  auto* count = app.add_subcommand("count", "Model count of a CNF, NNF or SDD file");
  std::string k_in, k_vtree, k_weights;
  bool k_check = false;
  count->add_option("circuit", k_in, "CNF, c2d NNF or SDD file")->required()->check(CLI::ExistingFile);
  count->add_option("--vtree", k_vtree, "Vtree spec (CNF) or vtree file (SDD)");
  count->add_flag("--check", k_check, "Verify circuit properties before counting");
  auto* wmc_cmd = app.add_subcommand("wmc", "Weighted model count");
  wmc_cmd->add_option("circuit", k_in, "CNF, c2d NNF or SDD file")->required()->check(CLI::ExistingFile);
  wmc_cmd->add_option("--vtree", k_vtree, "Vtree spec (CNF) or vtree file (SDD)");
  wmc_cmd->add_option("-w,--weights", k_weights, "Weights file (missing literals weigh 1.0)")->check(CLI::ExistingFile);
  wmc_cmd->add_flag("--check", k_check, "Verify circuit properties before counting");

  // map
  auto* map_cmd = app.add_subcommand("map", "E-MajSat: maximize over some variables, sum out the rest");
  std::string m_cnf, m_weights, m_max;
  map_cmd->add_option("cnf", m_cnf, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
  map_cmd->add_option("--maximize", m_max, "Variables to maximize, e.g. 1,2,5")->required();
  map_cmd->add_option("-w,--weights", m_weights, "Weights file")->check(CLI::ExistingFile);

  // bn
  auto* bn = app.add_subcommand("bn", "Bayesian networks by weighted model counting");
  bn->require_subcommand(1);
  std::string b_net, b_target, b_evidence, b_out, b_weights_out, b_vtree = "balanced";
  bool b_brute = false;
  auto* bn_encode = bn->add_subcommand("encode", "Write the CNF encoding and its weights");
  bn_encode->add_option("network", b_net, "Network JSON")->required()->check(CLI::ExistingFile);
  bn_encode->add_option("-o,--out", b_out, "CNF output (default standard output)");
  bn_encode->add_option("--weights-out", b_weights_out, "Weights output");
  auto* bn_marginal = bn->add_subcommand("marginal", "Pr(target | evidence)");
  bn_marginal->add_option("network", b_net, "Network JSON")->required()->check(CLI::ExistingFile);
  bn_marginal->add_option("--target", b_target, "Target, e.g. \"A ~B\" or A=1,B=0")->required();
  bn_marginal->add_option("--evidence", b_evidence, "Evidence, same syntax");
  bn_marginal->add_option("--vtree", b_vtree, "balanced or right-linear");
  bn_marginal->add_flag("--brute-force", b_brute, "Also report the brute-force value");
  auto* bn_mpe = bn->add_subcommand("mpe", "Most probable explanation");
  bn_mpe->add_option("network", b_net, "Network JSON")->required()->check(CLI::ExistingFile);
  bn_mpe->add_option("--evidence", b_evidence, "Evidence");
  bn_mpe->add_option("--vtree", b_vtree, "balanced or right-linear");
  bn_mpe->add_flag("--brute-force", b_brute, "Also report the brute-force value");

  // psdd
  auto* psdd = app.add_subcommand("psdd", "Probabilistic SDDs");
  psdd->require_subcommand(1);
  std::string p_cnf, p_data, p_model, p_vtree, p_assign, p_out;
  std::string p_spec = "balanced";
  double p_laplace = 0.0;
  std::uint64_t p_seed = 0;
  std::size_t p_count = 10;
  auto* p_learn = psdd->add_subcommand("learn", "Maximum-likelihood parameters from complete data");
  p_learn->add_option("cnf", p_cnf, "Constraint CNF")->required()->check(CLI::ExistingFile);
  p_learn->add_option("data", p_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  p_learn->add_option("-o,--out", p_out, "PSDD output; the vtree goes to <out>.vtree")->required();
  p_learn->add_option("--vtree", p_spec, "Vtree spec");
  p_learn->add_option("--laplace", p_laplace, "Pseudo-count per element")->check(CLI::NonNegativeNumber);
  auto model_opts = [&](CLI::App* s) {
    s->add_option("model", p_model, "PSDD file")->required()->check(CLI::ExistingFile);
    s->add_option("--vtree", p_vtree, "Vtree file (default <model>.vtree)");
  };
  auto* p_prob = psdd->add_subcommand("prob", "Probability of a complete instance");
  model_opts(p_prob);
  p_prob->add_option("--instance", p_assign, "DIMACS literals, e.g. \"1 -2 3\"")->required();
  auto* p_mar = psdd->add_subcommand("mar", "Probability of evidence");
  model_opts(p_mar);
  p_mar->add_option("--evidence", p_assign, "DIMACS literals");
  auto* p_mpe = psdd->add_subcommand("mpe", "Most likely completion of evidence");
  model_opts(p_mpe);
  p_mpe->add_option("--evidence", p_assign, "DIMACS literals");
  auto* p_sample = psdd->add_subcommand("sample", "Draw a dataset");
  model_opts(p_sample);
  p_sample->add_option("--seed", p_seed, "Random seed");
  p_sample->add_option("-n,--count", p_count, "Number of rows");
  auto* p_ll = psdd->add_subcommand("ll", "Log-likelihood of a dataset");
  model_opts(p_ll);
  p_ll->add_option("data", p_data, "Dataset CSV")->required()->check(CLI::ExistingFile);

  // space
  auto* space = app.add_subcommand("space", "CNF encodings of combinatorial spaces");
  space->require_subcommand(1);
  unsigned s_n = 0, s_w = 0, s_h = 0, s_source = 0, s_target = 0;
  std::string s_graph, s_out, s_cnf;
  std::uint64_t s_seed = 0;
  std::size_t s_count = 10;
  auto* s_rank = space->add_subcommand("rankings", "Total orders of n items");
  s_rank->add_option("n", s_n, "Item count (1..8)")->required();
  s_rank->add_option("-o,--out", s_out, "CNF output");
  auto* s_grid = space->add_subcommand("grid", "Monotone routes across a grid");
  s_grid->add_option("width", s_w, "Cells across")->required();
  s_grid->add_option("height", s_h, "Cells down")->required();
  s_grid->add_option("-o,--out", s_out, "CNF output");
  auto* s_routes = space->add_subcommand("graph", "Simple routes between two nodes of a graph");
  s_routes->add_option("graph", s_graph, "Graph file")->required()->check(CLI::ExistingFile);
  s_routes->add_option("--source", s_source, "Source node")->required();
  s_routes->add_option("--target", s_target, "Target node")->required();
  s_routes->add_option("-o,--out", s_out, "CNF output");
  auto* s_sample = space->add_subcommand("sample", "Uniform samples over the models of a CNF");
  s_sample->add_option("cnf", s_cnf, "CNF file")->required()->check(CLI::ExistingFile);
  s_sample->add_option("--seed", s_seed, "Random seed");
  s_sample->add_option("-n,--count", s_count, "Number of rows");

  // explain / robust
  std::string e_model, e_instance, e_names, e_protected, e_order;
  bool e_primes = false, e_all = false;
  auto* explain = app.add_subcommand("explain", "Explain a classifier decision");
  explain->add_option("model", e_model, "Naive Bayes JSON, forest JSON or CNF")->required()->check(CLI::ExistingFile);
  explain->add_option("--instance", e_instance, "Instance, e.g. \"A B ~C\"")->required();
  explain->add_option("--names", e_names, "Feature names for a CNF model");
  explain->add_option("--protected", e_protected, "Protected features (overrides the model file)");
  explain->add_option("--order", e_order, "Naive Bayes variable order");
  explain->add_flag("--prime-implicants", e_primes, "Also list the prime implicants of both classes");
  auto* robust = app.add_subcommand("robust", "Decision or model robustness");
  robust->add_option("model", e_model, "Naive Bayes JSON, forest JSON or CNF")->required()->check(CLI::ExistingFile);
  auto* r_inst = robust->add_option("--instance", e_instance, "Instance");
  auto* r_all = robust->add_flag("--all", e_all, "Histogram over all instances as CSV");
  r_inst->excludes(r_all);
  robust->add_option("--names", e_names, "Feature names for a CNF model");
  robust->add_option("--order", e_order, "Naive Bayes variable order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (show_version) {
      std::cout << kVersion << '\n';
      return 0;
    }
    if (show_formats) {
      std::cout << kFormats;
      return 0;
    }

    if (*compile) {
      Cnf cnf = load_cnf(c_cnf);
      if (cnf.var_count == 0) throw std::invalid_argument("CNF declares no variables");
      auto start = std::chrono::steady_clock::now();
      SddManager m(vtree_from_spec(c_vtree, cnf.var_count));
      SddId root = m.compile_cnf(cnf);
      auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (!c_out.empty()) write_output(c_out, to_sdd_string(m, root));
      if (!c_vtree_out.empty()) write_output(c_vtree_out, to_vtree_string(m.vtree()));
      if (!c_nnf_out.empty()) write_output(c_nnf_out, to_c2d_nnf(m.to_nnf(root)));
      json stats = {{"variables", cnf.var_count},
                    {"clauses", cnf.clauses.size()},
                    {"size", m.size(root)},
                    {"nodes", m.topological(root).size()},
                    {"decisions", m.decision_count(root)}};
      if (c_count) {
        BigInt mc = m.model_count(root);
        if (mc <= std::numeric_limits<std::uint64_t>::max())
          stats["model_count"] = mc.convert_to<std::uint64_t>();
        else
          stats["model_count"] = mc.str();
      }
      if (c_timing) stats["compile_ms"] = elapsed;
      std::cout << stats.dump() << '\n';
      return 0;
    }

    if (*count) {
      NnfCircuit c = load_circuit(k_in, k_vtree, k_check);
      std::cout << model_count(c, {k_check}).str() << '\n';
      return 0;
    }
    if (*wmc_cmd) {
      NnfCircuit c = load_circuit(k_in, k_vtree, k_check);
      std::cout << number(wmc(c, load_weights(k_weights, c.var_count()), {k_check})) << '\n';
      return 0;
    }

    if (*map_cmd) {
      Cnf cnf = load_cnf(m_cnf);
      std::vector<Var> y;
      for (const auto& tok : split_list(m_max)) y.push_back(parse_var(tok));
      std::vector<Var> z;
      for (Var v = 1; v <= cnf.var_count; ++v)
        if (std::find(y.begin(), y.end(), v) == y.end()) z.push_back(v);
      Vtree v = z.empty() || y.empty() ? Vtree::balanced(vars_of(cnf.var_count)) : Vtree::constrained(z, y);
      SddManager m(std::move(v));
      MapResult r = map_emajsat(m, m.compile_cnf(cnf), load_weights(m_weights, cnf.var_count), y);
      std::cout << json{{"assignment", literals_json(r.assignment)}, {"value", r.value}}.dump() << '\n';
      return 0;
    }

    if (*bn) {
      BayesNet net = parse_bayes_net_string(read_file(b_net));
      if (*bn_encode) {
        BnEncoding enc = encode(net);
        write_output(b_out, to_dimacs(enc.cnf));
        if (!b_weights_out.empty()) {
          std::ostringstream w;
          write_weights(w, enc.weights, enc.cnf.var_count);
          write_output(b_weights_out, w.str());
        }
        return 0;
      }
      if (*bn_marginal) {
        Query q{parse_evidence(b_target, net), parse_evidence(b_evidence, net)};
        if (q.target.empty()) throw std::invalid_argument("--target names no variable");
        CompiledNetwork cn(net, bn_vtree(b_vtree));
        double p = cn.marginal(q);
        json out = json::parse(query_record_json(net, q, p));
        if (b_brute) out["brute_force"] = query_marginal(net, q, BnBackend::BruteForce);
        std::cout << out.dump() << '\n';
        return 0;
      }
      if (*bn_mpe) {
        Evidence e = parse_evidence(b_evidence, net);
        CompiledNetwork cn(net, bn_vtree(b_vtree));
        auto state_json = [&](const Mpe& m) {
          json s = json::object();
          for (std::size_t i = 0; i < net.size(); ++i) s[net.name(i)] = static_cast<bool>(m.state[i]);
          return s;
        };
        Mpe m = cn.mpe(e);
        json out = {{"probability", m.probability}, {"state", state_json(m)}};
        if (b_brute) out["brute_force"] = query_mpe(net, e, BnBackend::BruteForce).probability;
        std::cout << out.dump() << '\n';
        return 0;
      }
    }

    if (*psdd) {
      if (*p_learn) {
        Cnf cnf = load_cnf(p_cnf);
        Dataset data = parse_dataset_csv_string(read_file(p_data));
        if (data.var_count != cnf.var_count)
          throw std::invalid_argument("dataset has " + std::to_string(data.var_count) + " columns but the CNF has " +
                                      std::to_string(cnf.var_count) + " variables");
        SddManager m(vtree_from_spec(p_spec, cnf.var_count));
        SddId base = m.compile_cnf(cnf);
        Psdd p = learn_ml(m, base, data, {p_laplace});
        write_output(p_out, to_psdd_string(p));
        write_output(p_out + ".vtree", to_vtree_string(p.vtree()));
        std::cout << json{{"log_likelihood", p.log_likelihood(data)}, {"nodes", p.size()}, {"rows", data.total()}}.dump()
                  << '\n';
        return 0;
      }
      Psdd p = load_psdd(p_model, p_vtree);
      if (*p_prob) {
        Term x = parse_literals(p_assign, p.var_count());
        if (!x.complete()) throw std::invalid_argument("--instance must set every variable");
        std::cout << json{{"probability", p.probability(x)}}.dump() << '\n';
      } else if (*p_mar) {
        std::cout << json{{"probability", p.marginal(parse_literals(p_assign, p.var_count()))}}.dump() << '\n';
      } else if (*p_mpe) {
        auto m = p.mpe(parse_literals(p_assign, p.var_count()));
        std::cout << json{{"probability", m.probability}, {"state", literals_json(m.state)}}.dump() << '\n';
      } else if (*p_sample) {
        write_dataset_csv(std::cout, p.sample(p_seed, p_count));
      } else if (*p_ll) {
        Dataset data = parse_dataset_csv_string(read_file(p_data));
        std::cout << json{{"log_likelihood", p.log_likelihood(data)}, {"rows", data.total()}}.dump() << '\n';
      }
      return 0;
    }

    if (*space) {
      if (*s_rank) write_output(s_out, to_dimacs(encode_rankings(s_n)));
      if (*s_grid) write_output(s_out, to_dimacs(encode_grid_routes_monotone(s_w, s_h)));
      if (*s_routes) write_output(s_out, to_dimacs(encode_simple_routes(parse_graph_string(read_file(s_graph)), s_source, s_target)));
      if (*s_sample) write_dataset_csv(std::cout, sample_space_dataset(load_cnf(s_cnf), s_seed, s_count));
      return 0;
    }

    if (*explain) {
      LoadedModel model = load_model(e_model, e_names, e_order);
      const DecisionFunction& f = model.f;
      Term x = parse_term(e_instance, f.names);
      if (!x.complete()) throw std::invalid_argument("--instance must set every feature");
      auto prot_names = e_protected.empty() ? model.protected_features : split_list(e_protected);
      auto prot = protected_vars(f, prot_names);
      json reasons = json::array();
      for (const auto& t : sufficient_reasons(f, x)) reasons.push_back(term_to_string(t, f.names));
      json out = {{"instance", term_to_string(x, f.names)},
                  {"decision", f(x)},
                  {"sufficient_reasons", reasons},
                  {"biased", decision_biased(f, x, prot)},
                  {"classifier_biased", classifier_biased(f, prot)},
                  {"protected", prot_names},
                  {"robustness", robustness_json(decision_robustness(f, x))}};
      if (e_primes) {
        json pos = json::array(), neg = json::array();
        for (const auto& t : prime_implicants(f)) pos.push_back(term_to_string(t, f.names));
        for (const auto& t : prime_implicants_of_negation(f)) neg.push_back(term_to_string(t, f.names));
        out["prime_implicants"] = {{"positive", pos}, {"negative", neg}};
      }
      std::cout << out.dump() << '\n';
      return 0;
    }

    if (*robust) {
      LoadedModel model = load_model(e_model, e_names, e_order);
      if (e_all) {
        std::cout << histogram_csv(robustness_histogram(model.f));
        return 0;
      }
      if (e_instance.empty()) throw std::invalid_argument("robust needs --instance or --all");
      Term x = parse_term(e_instance, model.f.names);
      if (!x.complete()) throw std::invalid_argument("--instance must set every feature");
      auto r = decision_robustness(model.f, x);
      std::cout << (r ? std::to_string(*r) : std::string("unbounded")) << '\n';
      return 0;
    }

    std::cerr << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "kc: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
