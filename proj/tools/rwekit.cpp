// Command-line front end: evaluation, tabulation, verification suites,
// Lambda construction, harmonic analysis/synthesis and the boundary-value
// pipeline.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rwekit/bvp.hpp"
#include "rwekit/harmonic.hpp"
#include "rwekit/hyperfun.hpp"
#include "rwekit/liealg.hpp"
#include "rwekit/rwe.hpp"

using namespace rwekit;
using json = nlohmann::ordered_json;

namespace {

// Exit codes.
constexpr int kOk = 0, kFail = 1, kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pair(cplx v) { return num(v.real()) + " " + num(v.imag()); }

HalfInt half(int twice) { return HalfInt::from_twice(twice); }

json cjson(cplx v) { return json::array({v.real(), v.imag()}); }

json mjson(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(cjson(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

// ---- JSON input ---------------------------------------------------------------

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw UsageError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw UsageError(where + ": unknown key \"" + k + "\"");
  }
}

template <class T>
T get_key(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw UsageError(where + ": missing key \"" + std::string(key) + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(where + ": bad value for key \"" + std::string(key) + "\"");
  }
}

cplx get_cplx(const json& j, const std::string& where, const char* key) {
  const auto v = get_key<std::vector<double>>(j, where, key);
  if (v.size() != 2) throw UsageError(where + ": key \"" + std::string(key) + "\" needs [re, im]");
  return {v[0], v[1]};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": malformed JSON: " + e.what());
  }
}

void check_format(const json& j, const std::string& where) {
  if (!j.contains("format")) throw UsageError(where + ": missing key \"format\"");
  if (j.at("format") != 1) throw UsageError(where + ": unsupported value for key \"format\"");
}

SpinChain chain_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"format", "links", "spin2", "kappa", "constants"});
  check_format(j, where);
  SpinChain c;
  if (!j.contains("links") || !j.at("links").is_array())
    throw UsageError(where + ": missing key \"links\"");
  int i = 0;
  for (const auto& l : j.at("links")) {
    const std::string w = where + ": links[" + std::to_string(i++) + "]";
    check_keys(l, w, {"l2", "ldot2", "k", "kdot"});
    ChainLink link;
    link.rep = {half(get_key<int>(l, w, "l2")), half(get_key<int>(l, w, "ldot2"))};
    if (l.contains("k")) link.k = get_key<int>(l, w, "k");
    if (l.contains("kdot")) link.kdot = get_key<int>(l, w, "kdot");
    c.links.push_back(link);
  }
  c.spin = half(get_key<int>(j, where, "spin2"));
  if (j.contains("kappa")) c.kappa = get_cplx(j, where, "kappa");
  if (j.contains("constants")) {
    c.default_constants = false;
    int k = 0;
    for (const auto& e : j.at("constants")) {
      const std::string w = where + ": constants[" + std::to_string(k++) + "]";
      check_keys(e, w, {"from", "to", "cls", "c", "cstar"});
      ChainConstant cc;
      cc.from = get_key<int>(e, w, "from");
      cc.to = get_key<int>(e, w, "to");
      cc.cls = get_key<int>(e, w, "cls");
      if (e.contains("c")) cc.c = get_cplx(e, w, "c");
      if (e.contains("cstar")) cc.cstar = get_cplx(e, w, "cstar");
      c.constants.push_back(cc);
    }
  }
  return c;
}

json chain_to_json(const SpinChain& c) {
  json j;
  j["format"] = 1;
  j["links"] = json::array();
  for (const auto& l : c.links)
    j["links"].push_back({{"l2", l.rep.l.twice()}, {"ldot2", l.rep.ldot.twice()}, {"k", l.k}, {"kdot", l.kdot}});
  j["spin2"] = c.spin.twice();
  j["kappa"] = cjson(c.kappa);
  if (!c.default_constants) {
    j["constants"] = json::array();
    for (const auto& k : c.constants)
      j["constants"].push_back(
          {{"from", k.from}, {"to", k.to}, {"cls", k.cls}, {"c", cjson(k.c)}, {"cstar", cjson(k.cstar)}});
  }
  return j;
}

SpinChain load_chain(const std::string& spec) {
  if (spec == "dirac") return dirac_chain();
  SpinChain c = chain_from_json(read_json(spec), spec);
  return c;
}

void require_valid(const SpinChain& c) {
  const auto p = chain_validate(c);
  if (!p.empty()) throw InvalidChain(p.front());
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

// ---- grids and CSV ------------------------------------------------------------

struct GridFlags {
  int ntheta = 6, nphi = 8, ntau = 6, neps = 6;
  double T = 1.0;
  void add(CLI::App* app) {
    app->add_option("--ntheta", ntheta, "Gauss-Legendre nodes in theta")->capture_default_str();
    app->add_option("--nphi", nphi, "uniform nodes in phi")->capture_default_str();
    app->add_option("--ntau", ntau, "Gauss-Legendre nodes in tau")->capture_default_str();
    app->add_option("--neps", neps, "Gauss-Legendre nodes in eps")->capture_default_str();
    app->add_option("--T", T, "truncation of tau and eps to [-T, T]")->capture_default_str();
  }
  SphereGrid make() const {
    if (ntheta < 1 || nphi < 1 || ntau < 1 || neps < 1 || !(T > 0))
      throw UsageError("grid sizes must be positive (--ntheta, --nphi, --ntau, --neps, --T)");
    return SphereGrid::make(ntheta, nphi, ntau, neps, T);
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(where + ": not a number: \"" + s + "\"");
  }
}

bool same_point(const SphereCoord& a, double th, double ta, double ph, double ep) {
  const double tol = 1e-9;
  return std::abs(a.theta - th) < tol && std::abs(a.tau - ta) < tol && std::abs(a.phi - ph) < tol &&
         std::abs(a.eps - ep) < tol;
}

// Rows keyed by a prefix of integer columns, then theta,tau,phi,eps,re,im in
// grid order.
std::map<std::vector<int>, std::vector<cplx>> read_grid_csv(const std::string& path,
                                                            const SphereGrid& g, int nkeys,
                                                            const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path + ": empty file");
  auto cols = split(line);
  if (cols != header) {
    std::string h;
    for (const auto& c : header) h += (h.empty() ? "" : ",") + c;
    throw UsageError(path + ": header must be " + h);
  }
  const auto pts = g.points();
  std::map<std::vector<int>, std::vector<cplx>> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split(line);
    const std::string w = path + ":" + std::to_string(row);
    if (static_cast<int>(c.size()) != nkeys + 6) throw UsageError(w + ": wrong number of columns");
    std::vector<int> key;
    for (int k = 0; k < nkeys; ++k) key.push_back(static_cast<int>(to_double(c[k], w)));
    auto& v = out[key];
    if (v.size() >= pts.size()) throw UsageError(w + ": more rows than grid points for one component");
    const auto& p = pts[v.size()];
    double x[6];
    for (int k = 0; k < 6; ++k) x[k] = to_double(c[nkeys + k], w);
    if (!same_point(p, x[0], x[1], x[2], x[3]))
      throw UsageError(w + ": coordinates do not follow the grid order (check the grid flags)");
    v.push_back({x[4], x[5]});
  }
  for (const auto& [k, v] : out)
    if (v.size() != pts.size()) throw UsageError(path + ": component is missing grid points");
  return out;
}

// ---- verification -------------------------------------------------------------

struct Check {
  std::string name;
  double residual;
  double tolerance;
};

struct Report {
  std::vector<Check> checks;
  void add(const std::string& n, double r, double tol) { checks.push_back({n, r, tol}); }
  bool pass() const {
    for (const auto& c : checks)
      if (!(c.residual < c.tolerance)) return false;
    return true;
  }
};

void suite_liealg(Report& rep, bool quick) {
  const int top = quick ? 4 : 6;
  double comm = 0, ladder = 0;
  for (int l2 = 0; l2 <= top; ++l2)
    for (int ld2 = 0; ld2 <= top; ++ld2) {
      const auto set = tensor_operators({half(l2), half(ld2)});
      for (const auto& r : commutator_check(set)) comm = std::max(comm, r.residual);
      ladder = std::max(ladder, ladder_action_check(set));
    }
  rep.add("commutators", comm, 1e-12);
  rep.add("ladder actions", ladder, 1e-12);
}

void suite_hyperfun(Report& rep, bool quick) {
  const int top = quick ? 2 : 4;
  const int ng = quick ? 6 : 20;
  double leg = 0, eig = 0, homo = 0;
  std::vector<double> rec(8, 0.0);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int l2 = 0; l2 <= top; ++l2)
    for (int ld2 = 0; ld2 <= top; ++ld2) {
      const HalfInt l = half(l2), ld = half(ld2);
      for (int a = 0; a < ng; ++a)
        for (int b = 0; b < ng; ++b) {
          const double th = 0.1 + (kPi - 0.2) * (a + 0.5) / ng, ta = -1.0 + 2.0 * (b + 0.5) / ng;
          for (HalfInt m : projections(l))
            for (HalfInt n : projections(l))
              for (HalfInt md : projections(ld))
                for (HalfInt nd : projections(ld)) {
                  const auto r = legendre_residual(l, ld, m, n, md, nd, th, ta);
                  leg = std::max({leg, r.res1, r.res2});
                  if (a % 3 == 0 && b % 3 == 0)
                    for (int k = 1; k <= 8; ++k)
                      rec[k - 1] = std::max(rec[k - 1], recurrence_residual(k, l, ld, m, n, md, nd, th, ta));
                }
        }
      for (int s = 0; s < (quick ? 3 : 10); ++s) {
        const GroupElement g{u(rng), u(rng), 1.5 + u(rng), u(rng), u(rng), u(rng)};
        const GroupElement h{u(rng), u(rng), 1.5 + u(rng), u(rng), u(rng), u(rng)};
        const RepLabel rl{l, ld};
        const CMatrix lhs = rep_matrix(rl, compose(g, h));
        const CMatrix rhs = rep_matrix(rl, g) * rep_matrix(rl, h);
        homo = std::max(homo, max_abs(lhs - rhs) / std::max(1.0, max_abs(rhs)));
        for (HalfInt m : projections(l))
          for (HalfInt n : projections(l))
            for (HalfInt md : projections(ld))
              for (HalfInt nd : projections(ld)) {
                const auto r = eigen_residual(rl, m, n, md, nd, g);
                eig = std::max({eig, r.res1, r.res2});
              }
      }
    }
  rep.add("complex Legendre equations", leg, 1e-8);
  for (int k = 0; k < 8; ++k) rep.add("recurrence " + std::to_string(k + 1), rec[k], 1e-8);
  rep.add("Laplace-Beltrami eigen-equations", eig, 1e-8);
  rep.add("homomorphism", homo, 1e-9);
}

void suite_rwe(Report& rep, const SpinChain& chain) {
  require_valid(chain);
  const LambdaSet lam = build_lambda(chain);
  const LambdaSet orc = lambda_oracle(chain);
  double d = 0;
  for (int k = 0; k < 3; ++k)
    d = std::max({d, max_abs(lam.L[k] - orc.L[k]), max_abs(lam.Lstar[k] - orc.Lstar[k])});
  rep.add("closed form vs coefficient system", d, 1e-11);
  const ChainOperators ops = chain_operators(chain);
  for (const auto& r : commutator_suite(lam, ops)) rep.add(r.name, r.residual, 1e-12);
  const DEMatrices de = de_matrices(chain, lam, ops);
  rep.add("D/E product vs tables", de.product_vs_table, 1e-12);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  double inv = 0;
  for (int s = 0; s < 50; ++s) {
    const GroupElement g{u(rng), u(rng), 1.5 + u(rng), u(rng), u(rng), u(rng)};
    const auto r = invariance_residual(lam, chain, g);
    inv = std::max({inv, r.lambda, r.lambda_star});
  }
  rep.add("invariance", inv, 1e-9);
}

void suite_bvp(Report& rep, const SpinChain& chain, bool quick) {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(-1, 1);
  double fr = 0, clo = 0;
  for (int s = 0; s < (quick ? 5 : 20); ++s) {
    const GroupElement g{u(rng), u(rng), 1.5 + u(rng), u(rng), 0, 0};
    for (const auto& r : frame_identities({3_h, 2_h}, g)) fr = std::max(fr, r.residual);
    clo = std::max(clo, frame_closure_residual(
                            sphere_embed(1.5 + 0.5 * u(rng), cplx(1.5 + u(rng), 0.5 * u(rng)),
                                         cplx(3 * u(rng), 0.5 * u(rng)))));
  }
  rep.add("frame identities (3/2,1)", fr, 1e-9);
  rep.add("derivative frame closure", clo, 1e-10);

  CMatrix C(1, 1);
  C(0, 0) = cplx(1, 1);
  CVector f0(1);
  f0(0) = 1.0;
  const cplx kappa(0.8, 0.3);
  const auto pr = integrate_radial(C, CMatrix::Zero(1, 1), kappa, f0, {1.0, 3.0});
  rep.add("scalar radial system", std::abs(pr.f[1](0) - std::exp(-kappa * 2.0 / cplx(1, 1))), 1e-9);

  require_valid(chain);
  std::set<RadialMode> modes;
  for (int l = 0; l < static_cast<int>(chain.links.size()); ++l)
    for (HalfInt m : projections(chain.links[l].rep.l))
      for (HalfInt md : projections(chain.links[l].rep.ldot))
        for (const auto& mode : component_modes(m, md, chain.max_l(), chain.max_ldot(), false))
          modes.insert(mode);
  double dc = 0, dk = 0, defect = 0;
  for (const auto& mode : modes) {
    const RadialSystem s = assemble_mode(chain, mode);
    const ProjectionOracle p = project_radial(chain, mode);
    dc = std::max({dc, max_abs(s.C - p.C), max_abs(s.Cstar - p.Cstar)});
    dk = std::max({dk, max_abs(s.K - p.K), max_abs(s.Kstar - p.Kstar)});
    defect = std::max(defect, p.separation_defect);
  }
  rep.add("radial C vs projection", dc, 1e-7);
  rep.add("radial K vs projection", dk, 1e-7);
  rep.add("separation remainder", defect, 1e-7);
}

int cmd_verify(const std::string& suite, const std::string& chain_path, bool quick,
               const std::string& out) {
  const SpinChain chain = load_chain(chain_path);
  Report rep;
  const bool all = suite == "all";
  if (all || suite == "liealg") suite_liealg(rep, quick);
  if (all || suite == "hyperfun") suite_hyperfun(rep, quick);
  if (all || suite == "rwe") suite_rwe(rep, chain);
  if (all || suite == "bvp") suite_bvp(rep, chain, quick);
  json j;
  j["format"] = 1;
  j["suite"] = suite;
  j["checks"] = json::array();
  for (const auto& c : rep.checks)
    j["checks"].push_back({{"name", c.name},
                           {"max_residual", c.residual},
                           {"tolerance", c.tolerance},
                           {"pass", c.residual < c.tolerance}});
  write_text(out, j.dump(2) + "\n");
  return rep.pass() ? kOk : kFail;
}

// ---- BVP bundle ---------------------------------------------------------------

json mode_json(const RadialMode& m) {
  return {{"l2", m.l0.twice()}, {"ldot2", m.ldot0.twice()}, {"n2", m.n.twice()}, {"ndot2", m.ndot.twice()}};
}

json solution_json(const FieldSolution& sol, const ResidualStats& st) {
  json j;
  j["format"] = 1;
  j["chain"] = chain_to_json(sol.chain);
  j["l0_2"] = sol.l0.twice();
  j["ldot0_2"] = sol.ldot0.twice();
  j["R"] = sol.R;
  j["Rmax"] = sol.Rmax;
  j["r_grid"] = sol.r_grid;
  j["profiles"] = json::array();
  json events = json::array();
  for (const auto& md : sol.modes) {
    json p;
    p["mode"] = mode_json(md.system.mode);
    p["index"] = json::array();
    for (const auto& c : md.system.index)
      p["index"].push_back({{"link", c.link}, {"m2", c.m.twice()}, {"mdot2", c.mdot.twice()}});
    for (int track = 0; track < 2; ++track) {
      const auto& pr = track == 0 ? md.profiles.primal : md.profiles.dual;
      json rows = json::array();
      for (const auto& f : pr.f) {
        json row = json::array();
        for (Eigen::Index i = 0; i < f.size(); ++i) row.push_back(cjson(f(i)));
        rows.push_back(row);
      }
      p[track == 0 ? "f" : "fstar"] = rows;
      events.push_back({{"mode", mode_json(md.system.mode)},
                        {"track", track},
                        {"size", static_cast<int>(md.system.index.size())},
                        {"differential_rank", pr.differential_rank}});
    }
    j["profiles"].push_back(p);
  }
  j["coefficients"] = json::array();
  for (const auto& [key, cs] : sol.fit.coeffs) {
    json c{{"track", key.track}, {"link", key.link}, {"m2", key.m.twice()}, {"mdot2", key.mdot.twice()}};
    c["modes"] = json::array();
    for (const auto& mc : cs) {
      json m = mode_json(mc.mode);
      m["value"] = cjson(mc.value);
      c["modes"].push_back(m);
    }
    j["coefficients"].push_back(c);
  }
  j["diagnostics"] = {{"boundary_residual", sol.fit.residual},
                      {"boundary_relative_residual", sol.fit.relative_residual},
                      {"pde_residual",
                       {{"max", st.max},
                        {"rms", st.rms},
                        {"relative_max", st.relative_max},
                        {"relative_rms", st.relative_rms},
                        {"field_norm", st.field_norm},
                        {"used", st.used},
                        {"skipped", st.skipped}}},
                      {"rank_events", events},
                      {"messages", sol.diagnostics}};
  return j;
}

// ---- CoeffTable JSON ----------------------------------------------------------

json coeffs_json(const CoeffTable& t) {
  json j;
  j["format"] = 1;
  j["L2"] = t.bandlimit2();
  j["coefficients"] = json::array();
  for (const auto& [k, v] : t.entries())
    j["coefficients"].push_back({{"l2", k[0]}, {"ldot2", k[1]}, {"m2", k[2]}, {"mdot2", k[3]}, {"value", cjson(v)}});
  return j;
}

CoeffTable coeffs_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"format", "L2", "coefficients"});
  check_format(j, where);
  CoeffTable t(get_key<int>(j, where, "L2"));
  if (!j.contains("coefficients")) throw UsageError(where + ": missing key \"coefficients\"");
  int i = 0;
  for (const auto& e : j.at("coefficients")) {
    const std::string w = where + ": coefficients[" + std::to_string(i++) + "]";
    check_keys(e, w, {"l2", "ldot2", "m2", "mdot2", "value"});
    try {
      t.set(half(get_key<int>(e, w, "l2")), half(get_key<int>(e, w, "ldot2")),
            half(get_key<int>(e, w, "m2")), half(get_key<int>(e, w, "mdot2")), get_cplx(e, w, "value"));
    } catch (const InvalidArgument& ex) {
      throw UsageError(w + ": " + ex.what());
    }
  }
  return t;
}

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int default_threads() {
  if (const char* e = std::getenv("RWEKIT_THREADS")) {
    try {
      return std::max(0, std::stoi(e));
    } catch (const std::exception&) {
      throw UsageError("RWEKIT_THREADS must be an integer");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rwekit: hyperspherical functions, Lambda matrices and boundary-value solver"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (default: RWEKIT_THREADS or all cores)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate one function value");
  eval->require_subcommand(1);
  struct {
    int l2 = 0, ld2 = 0, m2 = 0, n2 = 0, md2 = 0, nd2 = 0;
    double theta = 0, tau = 0, phi = 0, eps = 0, psi = 0, epspsi = 0;
  } ev;
  auto* ez = eval->add_subcommand("z", "Z^l_{mn}(theta - i tau); prints \"re im\"");
  ez->add_option("--l2", ev.l2, "2l")->required();
  ez->add_option("--m2", ev.m2, "2m")->required();
  ez->add_option("--n2", ev.n2, "2n")->required();
  ez->add_option("--theta", ev.theta, "theta")->required();
  ez->add_option("--tau", ev.tau, "tau")->required();
  auto* em = eval->add_subcommand("m", "generalized matrix element; prints \"re im\"");
  auto* er = eval->add_subcommand("rep", "representation matrix; one row per line of \"re im\" pairs");
  for (auto* s : {em, er}) {
    s->add_option("--l2", ev.l2, "2l")->required();
    s->add_option("--ldot2", ev.ld2, "2ldot")->required();
    s->add_option("--theta", ev.theta, "theta")->required();
    s->add_option("--tau", ev.tau, "tau")->required();
    s->add_option("--phi", ev.phi, "phi")->capture_default_str();
    s->add_option("--eps", ev.eps, "eps (imaginary part of -phi_c)")->capture_default_str();
    s->add_option("--psi", ev.psi, "psi")->capture_default_str();
    s->add_option("--epspsi", ev.epspsi, "eps of psi")->capture_default_str();
  }
  em->add_option("--m2", ev.m2, "2m")->required();
  em->add_option("--n2", ev.n2, "2n")->required();
  em->add_option("--mdot2", ev.md2, "2mdot")->required();
  em->add_option("--ndot2", ev.nd2, "2ndot")->required();

  // tabulate
  auto* tab = app.add_subcommand("tabulate", "CSV table of Z^l_{mn} on a (theta, tau) grid");
  struct {
    int l2 = 0, ntheta = 20, ntau = 20;
    double tau_max = 1.0;
    std::string out = "-";
  } tb;
  tab->add_option("--l2", tb.l2, "2l")->required();
  tab->add_option("--ntheta", tb.ntheta, "theta nodes on (0, pi)")->capture_default_str();
  tab->add_option("--ntau", tb.ntau, "tau nodes on [-tau-max, tau-max]")->capture_default_str();
  tab->add_option("--tau-max", tb.tau_max, "tau range")->capture_default_str();
  tab->add_option("--out", tb.out, "output CSV (- for stdout)")->capture_default_str();

  // verify
  auto* ver = app.add_subcommand("verify", "run a verification suite; JSON report, exit 0 iff all pass");
  std::string suite, ver_chain = "dirac", ver_out = "-";
  bool quick = false;
  ver->add_option("suite", suite, "liealg | hyperfun | rwe | bvp | all")
      ->required()
      ->check(CLI::IsMember({"liealg", "hyperfun", "rwe", "bvp", "all"}));
  ver->add_option("--chain", ver_chain, "chain JSON file or \"dirac\"")->capture_default_str();
  ver->add_flag("--quick", quick, "smaller index ranges and sample counts");
  ver->add_option("--out", ver_out, "report path (- for stdout)")->capture_default_str();

  // build-lambda
  auto* bl = app.add_subcommand("build-lambda", "Lambda matrices of a chain as JSON");
  std::string bl_chain, bl_out = "-";
  bl->add_option("--chain", bl_chain, "chain JSON file or \"dirac\"")->required();
  bl->add_option("--out", bl_out, "output JSON (- for stdout)")->capture_default_str();

  // analyze / synthesize
  GridFlags grid;
  auto* an = app.add_subcommand("analyze", "least-squares coefficients of sphere samples");
  std::string an_in, an_out = "-";
  int an_L2 = 0;
  an->add_option("--samples", an_in, "CSV theta,tau,phi,eps,re,im in grid order")->required();
  an->add_option("--L2", an_L2, "2L band limit")->required();
  an->add_option("--out", an_out, "coefficient JSON (- for stdout)")->capture_default_str();
  grid.add(an);
  auto* sy = app.add_subcommand("synthesize", "sphere samples of a coefficient table as CSV");
  std::string sy_in, sy_out = "-";
  sy->add_option("--coeffs", sy_in, "coefficient JSON")->required();
  sy->add_option("--out", sy_out, "output CSV (- for stdout)")->capture_default_str();
  grid.add(sy);

  // solve
  auto* so = app.add_subcommand("solve", "boundary-value problem: analyze, integrate, synthesize");
  std::string so_chain, so_boundary, so_out = "-";
  int l0_2 = -1, ld0_2 = -1, n_r = 21, n_check = 50;
  double R = 1.0, Rmax = 3.0, rtol = 1e-9, atol = 1e-12;
  bool all_columns = false;
  so->add_option("--chain", so_chain, "chain JSON file or \"dirac\"")->required();
  so->add_option("--boundary", so_boundary,
                 "CSV track,link,m2,mdot2,theta,tau,phi,eps,re,im in grid order")
      ->required();
  so->add_option("--l0", l0_2, "truncation l0, doubled (3 means 3/2)")->required();
  so->add_option("--ldot0", ld0_2, "truncation ldot0, doubled")->required();
  so->add_option("--R", R, "boundary radius")->capture_default_str();
  so->add_option("--Rmax", Rmax, "outer radius")->capture_default_str();
  so->add_option("--nr", n_r, "radii in the output grid")->capture_default_str();
  so->add_option("--rtol", rtol, "relative tolerance")->capture_default_str();
  so->add_option("--atol", atol, "absolute tolerance")->capture_default_str();
  so->add_option("--check-points", n_check, "interior points for the PDE residual")->capture_default_str();
  so->add_flag("--all-columns", all_columns, "fit every (n, ndot) column, not only the sphere column");
  so->add_option("--out", so_out, "solution JSON (- for stdout)")->capture_default_str();
  grid.add(so);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    set_threads(threads > 0 ? threads : default_threads());
    if (*eval) {
      const GroupElement g{ev.phi, ev.eps, ev.theta, ev.tau, ev.psi, ev.epspsi};
      if (*ez) {
        std::cout << pair(zfun(half(ev.l2), half(ev.m2), half(ev.n2), ev.theta, ev.tau)) << "\n";
      } else if (*em) {
        std::cout << pair(mfun({half(ev.l2), half(ev.ld2)}, half(ev.m2), half(ev.n2), half(ev.md2),
                               half(ev.nd2), g))
                  << "\n";
      } else {
        const CMatrix m = rep_matrix({half(ev.l2), half(ev.ld2)}, g);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          for (Eigen::Index k = 0; k < m.cols(); ++k) std::cout << (k ? " " : "") << pair(m(i, k));
          std::cout << "\n";
        }
      }
      return kOk;
    }
    if (*tab) {
      if (tb.ntheta < 1 || tb.ntau < 1) throw UsageError("--ntheta and --ntau must be positive");
      const HalfInt l = half(tb.l2);
      std::ostringstream os;
      os << "theta,tau,m2,n2,re,im\n";
      for (int a = 0; a < tb.ntheta; ++a)
        for (int b = 0; b < tb.ntau; ++b) {
          const double th = kPi * (a + 0.5) / tb.ntheta;
          const double ta = tb.ntau == 1 ? 0.0 : -tb.tau_max + 2 * tb.tau_max * b / (tb.ntau - 1);
          const CMatrix z = zmatrix(l, th, ta);
          const auto ps = projections(l);
          for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t k = 0; k < ps.size(); ++k)
              os << num(th) << "," << num(ta) << "," << ps[i].twice() << "," << ps[k].twice() << ","
                 << num(z(i, k).real()) << "," << num(z(i, k).imag()) << "\n";
        }
      write_text(tb.out, os.str());
      return kOk;
    }
    if (*ver) return cmd_verify(suite, ver_chain, quick, ver_out);
    if (*bl) {
      const SpinChain c = load_chain(bl_chain);
      require_valid(c);
      const LambdaSet lam = build_lambda(c);
      json j;
      j["format"] = 1;
      j["chain"] = chain_to_json(c);
      j["Lambda"] = json::array();
      j["Lambda_star"] = json::array();
      for (int k = 0; k < 3; ++k) {
        j["Lambda"].push_back(mjson(lam.L[k]));
        j["Lambda_star"].push_back(mjson(lam.Lstar[k]));
      }
      write_text(bl_out, j.dump(2) + "\n");
      return kOk;
    }
    if (*an) {
      const SphereGrid g = grid.make();
      const auto rows = read_grid_csv(an_in, g, 0, {"theta", "tau", "phi", "eps", "re", "im"});
      if (rows.empty()) throw UsageError(an_in + ": no samples");
      FieldSamples s{g, rows.begin()->second};
      const AnalysisResult r = analyze_sphere(s, an_L2);
      json j = coeffs_json(r.coeffs);
      j["residual"] = r.residual;
      j["relative_residual"] = r.relative_residual;
      j["condition"] = r.condition;
      j["warnings"] = r.warnings;
      write_text(an_out, j.dump(2) + "\n");
      return kOk;
    }
    if (*sy) {
      json j = read_json(sy_in);
      for (const char* k : {"residual", "relative_residual", "condition", "warnings"}) j.erase(k);
      const CoeffTable t = coeffs_from_json(j, sy_in);
      const FieldSamples s = synthesize_on_grid(t, grid.make());
      std::ostringstream os;
      os << "theta,tau,phi,eps,re,im\n";
      for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const auto p = s.grid.point(i);
        os << num(p.theta) << "," << num(p.tau) << "," << num(p.phi) << "," << num(p.eps) << ","
           << num(s.values[i].real()) << "," << num(s.values[i].imag()) << "\n";
      }
      write_text(sy_out, os.str());
      return kOk;
    }
    if (*so) {
      const SpinChain c = load_chain(so_chain);
      try {
        require_valid(c);
      } catch (const InvalidChain& e) {
        std::cerr << "error: invalid chain: " << e.what() << "\n";
        return kFail;
      }
      const HalfInt l0 = half(l0_2), ld0 = half(ld0_2);
      if (l0 < c.max_l()) throw UsageError("l0 too small");
      if (ld0 < c.max_ldot()) throw UsageError("ldot0 too small");
      const SphereGrid g = grid.make();
      BoundaryData bd;
      bd.R = R;
      bd.grid = g;
      const auto rows = read_grid_csv(so_boundary, g, 4,
                                      {"track", "link", "m2", "mdot2", "theta", "tau", "phi", "eps", "re", "im"});
      for (const auto& [k, v] : rows) bd.values[{k[0], k[1], half(k[2]), half(k[3])}] = v;
      SolveOptions opt;
      opt.R = R;
      opt.Rmax = Rmax;
      opt.n_r = n_r;
      opt.boundary.all_columns = all_columns;
      opt.integration = {rtol, atol};
      FieldSolution sol;
      try {
        sol = solve(c, bd, l0, ld0, opt);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
      const ResidualStats st = pde_residual(sol.evaluator(), c, interior_samples(n_check, R, Rmax));
      write_text(so_out, solution_json(sol, st).dump(2) + "\n");
      std::cerr << "boundary_residual " << num(sol.fit.residual) << " boundary_relative_residual "
                << num(sol.fit.relative_residual) << " pde_residual_relative " << num(st.relative_max)
                << " field_norm " << num(st.field_norm) << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidChain& e) {
    std::cerr << "error: invalid chain: " << e.what() << "\n";
    return kFail;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kOk;
}
