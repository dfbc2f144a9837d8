#include "psido/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "psido/decompose.hpp"
#include "psido/errors.hpp"
#include "psido/fio.hpp"
#include "psido/moyal.hpp"
#include "psido/symbol_json.hpp"

namespace psido {

using nlohmann::json;
namespace fs = std::filesystem;

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

namespace {

void check_keys(const json& cfg, const std::set<std::string>& allowed) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : cfg.items())
    if (!allowed.count(k)) throw ConfigError("unknown config key '" + k + "'");
}

template <class T>
T get(const json& cfg, const std::string& key, T def) {
  if (!cfg.contains(key)) return def;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

double positive(const json& cfg, const std::string& key, double def) {
  const double v = get<double>(cfg, key, def);
  if (!(v > 0.0)) throw ConfigError("config key '" + key + "' must be positive");
  return v;
}

int positive_int(const json& cfg, const std::string& key, int def) {
  const int v = get<int>(cfg, key, def);
  if (v <= 0) throw ConfigError("config key '" + key + "' must be a positive integer");
  return v;
}

std::vector<int> int_list(const json& cfg, const std::string& key, std::vector<int> def, int min_value,
                          std::size_t min_size) {
  const auto v = get<std::vector<int>>(cfg, key, std::move(def));
  if (v.size() < min_size)
    throw ConfigError("config key '" + key + "' needs at least " + std::to_string(min_size) + " entries");
  for (int x : v)
    if (x < min_value) throw ConfigError("config key '" + key + "' has an entry below " + std::to_string(min_value));
  return v;
}

Eigen::Matrix2i int_matrix(const json& cfg, const std::string& key, Eigen::Matrix2i def) {
  if (!cfg.contains(key)) return def;
  const auto rows = get<std::vector<std::vector<int>>>(cfg, key, {});
  if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2)
    throw ConfigError("config key '" + key + "' must be a 2x2 integer matrix");
  Eigen::Matrix2i L;
  L << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
  return L;
}

TrigSymbol trig(const json& cfg, const std::string& key, TrigSymbol def) {
  if (!cfg.contains(key)) return def;
  try {
    return trig_from_json(cfg.at(key));
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

PolySymbol random_poly(std::mt19937_64& rng, PhaseSpace ps, int max_deg, int terms) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_int_distribution<int> var(0, ps.dim() - 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PolySymbol p(ps);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(static_cast<std::size_t>(ps.dim()), 0);
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) ++e[static_cast<std::size_t>(var(rng))];
    const double re = coef(rng);
    const double im = coef(rng);
    p.add_term(make_exponent(e), Complex(re, im));
  }
  return p;
}

HExpansion random_expansion(std::mt19937_64& rng, PhaseSpace ps, int max_deg, int terms, int trunc) {
  std::vector<PolySymbol> c;
  for (int j = 0; j <= trunc; ++j) c.push_back(random_poly(rng, ps, max_deg, terms));
  return HExpansion::from_coeffs(c, trunc);
}

std::vector<std::pair<TrigSymbol, TrigSymbol>> default_pairs() {
  return {{TrigSymbol::cos_x(), TrigSymbol::cos_xi()},
          {TrigSymbol::cosine(1, 1) + TrigSymbol::sine(0, 1, 0.5), TrigSymbol::sine(1, 0) + TrigSymbol::cosine(1, -1, 0.3)},
          {TrigSymbol::cosine(2, 1), TrigSymbol::sine(1, 2, 0.7) + TrigSymbol::cos_xi()}};
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_star_test(const json& cfg, const fs::path& out, std::uint64_t seed, std::ostream& log) {
  check_keys(cfg, {"triples", "max_n", "max_degree", "max_trunc", "terms", "rel_tol", "N", "K", "pairs", "slope_tol"});
  const int triples = positive_int(cfg, "triples", 200);
  const int max_n = positive_int(cfg, "max_n", 2);
  const int max_degree = get<int>(cfg, "max_degree", 4);
  const int max_trunc = get<int>(cfg, "max_trunc", 4);
  const int terms = positive_int(cfg, "terms", 4);
  const double rel_tol = positive(cfg, "rel_tol", 1e-12);
  const auto Ns = int_list(cfg, "N", {32, 64, 128, 256, 512}, 2, 2);
  const auto Ks = int_list(cfg, "K", {0, 1, 2}, 0, 1);
  const double slope_tol = positive(cfg, "slope_tol", 0.3);
  if (max_degree < 0 || max_trunc < 0) throw ConfigError("degree and truncation bounds must be nonnegative");
  auto pairs = default_pairs();
  if (cfg.contains("pairs")) {
    pairs.clear();
    try {
      for (const auto& p : cfg.at("pairs")) pairs.emplace_back(trig_from_json(p.at(0)), trig_from_json(p.at(1)));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key 'pairs': ") + e.what());
    }
    if (pairs.empty()) throw ConfigError("config key 'pairs' is empty");
  }

  struct Row {
    std::string suite;
    int trial;
    std::uint64_t seed;
    double value;
    double tol;
    bool pass;
  };
  std::vector<Row> rows;
  std::map<std::string, std::pair<double, int>> worst;  // suite -> (max value, failures)
  auto record = [&](const std::string& suite, int t, std::uint64_t s, double v, double tol) {
    const bool ok = v <= tol;
    rows.push_back({suite, t, s, v, tol, ok});
    auto& w = worst[suite];
    w.first = std::max(w.first, v);
    if (!ok) ++w.second;
  };

  for (int t = 0; t < triples; ++t) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(t);
    std::mt19937_64 rng(s);
    const PhaseSpace ps(1 + t % max_n);
    const int K = t % (max_trunc + 1);
    const StarContext ctx(ps, K);
    const auto a = random_expansion(rng, ps, max_degree, terms, K);
    const auto b = random_expansion(rng, ps, max_degree, terms, K);
    const auto c = random_expansion(rng, ps, max_degree, terms, K);
    const HExpansion lhs = star(star(a, b, ctx), c, ctx);
    const HExpansion rhs = star(a, star(b, c, ctx), ctx);
    record("associativity", t, s, (lhs - rhs).max_abs() / std::max(1.0, lhs.max_abs()), rel_tol);

    const HExpansion one = HExpansion::constant(ps, 1.0, K);
    record("unit", t, s, std::max((star(one, a, ctx) - a).max_abs(), (star(a, one, ctx) - a).max_abs()), 0.0);

    // h-independent symbols: (p # q)_k = (-1)^k (q # p)_k, and the scaled
    // commutator starts with the Poisson bracket.
    const PolySymbol p = a.coeff(0), q = b.coeff(0);
    const HExpansion P = HExpansion::principal(p, K), Q = HExpansion::principal(q, K);
    const HExpansion pq = star(P, Q, ctx), qp = star(Q, P, ctx);
    double par = 0.0;
    for (int k = 0; k <= K; ++k)
      par = std::max(par, (pq.coeff(k) - qp.coeff(k) * Complex(k % 2 ? -1.0 : 1.0)).max_abs_coefficient());
    record("parity", t, s, par / std::max(1.0, pq.max_abs()), rel_tol);
    if (K >= 1) {
      const PolySymbol br = star_commutator_scaled(P, Q, ctx).coeff(0);
      const PolySymbol pb = poisson_bracket(p, q);
      record("bracket", t, s, (br - pb).max_abs_coefficient() / std::max(1.0, pb.max_abs_coefficient()), rel_tol);
    }
  }

  std::ostringstream suite_csv;
  suite_csv << "suite,trial,seed,value,tolerance,pass\n";
  for (const auto& r : rows)
    suite_csv << r.suite << "," << r.trial << "," << r.seed << "," << fmt(r.value) << "," << fmt(r.tol) << ","
              << (r.pass ? 1 : 0) << "\n";

  std::ostringstream scan_csv_os;
  scan_csv_os << "K,pair,N,h,residual,fitted_slope\n";
  json compose = json::array();
  bool compose_ok = true;
  for (int K : Ks)
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      std::vector<double> hs, rs;
      for (int N : Ns) {
        const TorusGrid g(N);
        hs.push_back(g.h());
        rs.push_back(compose_vs_star(pairs[pi].first, pairs[pi].second, g, K));
      }
      const SlopeFit fit = fit_slope(hs, rs);
      const bool ok = std::abs(fit.slope - (K + 1)) <= slope_tol;
      compose_ok = compose_ok && ok;
      for (std::size_t i = 0; i < Ns.size(); ++i)
        scan_csv_os << K << "," << pi << "," << Ns[i] << "," << fmt(hs[i]) << "," << fmt(rs[i]) << "," << fmt(fit.slope)
                    << "\n";
      compose.push_back({{"K", K}, {"pair", pi}, {"slope", fit.slope}, {"expected", K + 1}, {"pass", ok}});
    }

  bool ok = compose_ok;
  json suites = json::object();
  json failures = json::array();
  for (const auto& [name, w] : worst) {
    suites[name] = {{"worst", w.first}, {"failures", w.second}};
    ok = ok && w.second == 0;
  }
  for (const auto& r : rows)
    if (!r.pass) failures.push_back({{"suite", r.suite}, {"trial", r.trial}, {"seed", r.seed}, {"value", r.value}});

  fs::create_directories(out);
  write_file(out / "star_test.csv", suite_csv.str());
  write_file(out / "compose_scan.csv", scan_csv_os.str());
  write_file(out / "report.json",
             json{{"command", "star-test"}, {"seed", seed}, {"suites", suites}, {"compose", compose},
                  {"failures", failures}, {"pass", ok}}
                     .dump(2) +
                 "\n");

  for (const auto& [name, w] : worst)
    log << std::left << std::setw(14) << name << " worst " << fmt(w.first) << "  failures " << w.second << "\n";
  for (const auto& c : compose)
    log << "compose K=" << c["K"].get<int>() << " pair " << c["pair"].get<int>() << " slope "
        << fmt(c["slope"].get<double>()) << (c["pass"].get<bool>() ? "  ok" : "  FAIL") << "\n";
  for (const auto& f : failures)
    log << "failed " << f["suite"].get<std::string>() << " seed " << f["seed"].get<std::uint64_t>() << "\n";
  log << (ok ? "star-test: pass" : "star-test: FAIL") << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

int cmd_egorov_scan(const json& cfg, const fs::path& out, std::uint64_t seed, std::ostream& log) {
  check_keys(cfg, {"mode", "N", "L", "L_kappa", "symbol", "amplitude", "steps", "band", "samples", "slope_min",
                   "slope_max", "exact_tol", "flag_min"});
  const std::string mode = get<std::string>(cfg, "mode", "cat");
  if (mode != "cat" && mode != "kick" && mode != "mismatch")
    throw ConfigError("egorov-scan mode must be 'cat', 'kick' or 'mismatch'");
  const auto Ns = int_list(cfg, "N", mode == "kick" ? std::vector<int>{64, 128, 256} : std::vector<int>{32, 64, 128}, 2,
                           2);
  Eigen::Matrix2i Ld;
  Ld << 2, 1, 1, 1;
  const Eigen::Matrix2i L = int_matrix(cfg, "L", Ld);
  Eigen::Matrix2i Lk0;
  Lk0 << 1, 1, 0, 1;
  const Eigen::Matrix2i Lk = int_matrix(cfg, "L_kappa", Lk0);
  const TrigSymbol a = trig(cfg, "symbol", TrigSymbol::cos_x() + TrigSymbol::sine(0, 1, 0.5));
  const double amp = positive(cfg, "amplitude", 0.02);
  const int steps = positive_int(cfg, "steps", 1024);
  const int band = positive_int(cfg, "band", 16);
  const int samples = positive_int(cfg, "samples", 34);
  const double slope_min = get<double>(cfg, "slope_min", 1.7);
  const double slope_max = get<double>(cfg, "slope_max", 2.5);
  const double exact_tol = positive(cfg, "exact_tol", 1e-10);
  const double flag_min = positive(cfg, "flag_min", 0.1);
  if (slope_min >= slope_max) throw ConfigError("slope_min must be below slope_max");
  if (mode != "kick")
    for (int N : Ns)
      if (!cat_quantizable(mode == "cat" ? L : L, N))
        throw ConfigError("matrix is not quantizable at N = " + std::to_string(N));

  std::vector<ScanRow> rows;
  std::vector<double> hs, rs;
  TrigSymbol pulled;
  if (mode == "kick") {
    const TrigSymbol q = TrigSymbol::cos_x(amp) + TrigSymbol::cos_xi(amp);
    pulled = pullback_trig(a, SymplecticMap::flow(HamiltonianPath::autonomous(q), steps), band, samples);
    for (int N : Ns) {
      const TorusGrid g(N);
      const auto F = propagate(HamiltonianPath::autonomous(q), g, 1);
      hs.push_back(g.h());
      rs.push_back(egorov_residual(F, a, pulled));
    }
  } else {
    pulled = pullback(a, mode == "cat" ? L : Lk);
    for (int N : Ns) {
      const TorusGrid g(N);
      hs.push_back(g.h());
      rs.push_back(egorov_residual(metaplectic_cat(L, g), a, pulled));
    }
  }
  for (std::size_t i = 0; i < Ns.size(); ++i) rows.push_back({Ns[i], hs[i], rs[i], mode});

  bool ok = false;
  double slope = 0.0;
  std::string verdict;
  if (mode == "cat") {
    const double worst = *std::max_element(rs.begin(), rs.end());
    ok = worst <= exact_tol;
    verdict = "exact case, max residual " + fmt(worst);
  } else if (mode == "kick") {
    slope = fit_slope(hs, rs).slope;
    ok = slope >= slope_min && slope <= slope_max;
    verdict = "slope " + fmt(slope);
  } else {
    const double least = *std::min_element(rs.begin(), rs.end());
    ok = least >= flag_min;
    slope = fit_slope(hs, rs).slope;
    verdict = std::string(ok ? "mismatch flagged" : "mismatch NOT flagged") + ", min residual " + fmt(least);
  }

  fs::create_directories(out);
  write_file(out / "egorov_scan.csv", scan_csv(rows, slope));
  json res = json::array();
  for (const auto& r : rows) res.push_back({{"N", r.N}, {"h", r.h}, {"residual", r.residual}});
  write_file(out / "report.json", json{{"command", "egorov-scan"},
                                       {"mode", mode},
                                       {"seed", seed},
                                       {"rows", res},
                                       {"fitted_slope", slope},
                                       {"verdict", verdict},
                                       {"pass", ok}}
                                          .dump(2) +
                                      "\n");
  for (const auto& r : rows) log << "N=" << std::setw(5) << r.N << "  residual " << fmt(r.residual) << "\n";
  log << "egorov-scan (" << mode << "): " << verdict << (ok ? "  pass" : "  FAIL") << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

namespace {

int decompose_torus_recipe(const json& cfg, const fs::path& out, std::uint64_t seed, std::ostream& log) {
  const auto Ns = int_list(cfg, "N", {64, 128, 256}, 2, 2);
  const int depth = get<int>(cfg, "depth", 1);
  if (depth < 1 || depth > 2) throw ConfigError("torus decompositions support depth 1 or 2");
  Eigen::Matrix2i Ld;
  Ld << 2, 1, 1, 1;
  const Eigen::Matrix2i L = int_matrix(cfg, "L", Ld);
  std::vector<TrigSymbol> pots = {TrigSymbol::cos_x(-1.0), TrigSymbol::sine(0, 1, 0.5)};
  if (cfg.contains("torus_potentials")) {
    pots.clear();
    for (const auto& p : cfg.at("torus_potentials")) pots.push_back(trig_from_json(p));
  }
  const double margin = get<double>(cfg, "slope_margin", 0.7);
  for (int N : Ns)
    if (!cat_quantizable(L, N)) throw ConfigError("matrix is not quantizable at N = " + std::to_string(N));
  std::vector<ScanRow> rows;
  std::vector<double> hs, rs;
  bool L_ok = true;
  for (int N : Ns) {
    const TorusGrid g(N);
    const auto d = decompose_torus(synthesize_torus_oracle(g, L, pots), depth);
    L_ok = L_ok && d.L == L;
    hs.push_back(g.h());
    rs.push_back(d.residuals.back());
    rows.push_back({N, g.h(), d.residuals.back(), "depth" + std::to_string(depth)});
  }
  const double slope = fit_slope(hs, rs).slope;
  const bool ok = L_ok && slope >= depth + margin;
  fs::create_directories(out);
  write_file(out / "torus_scan.csv", scan_csv(rows, slope));
  write_file(out / "report.json", json{{"command", "decompose"},
                                       {"recipe", "torus"},
                                       {"seed", seed},
                                       {"depth", depth},
                                       {"cat_matrix_recovered", L_ok},
                                       {"fitted_slope", slope},
                                       {"pass", ok}}
                                          .dump(2) +
                                      "\n");
  for (const auto& r : rows) log << "N=" << std::setw(5) << r.N << "  residual " << fmt(r.residual) << "\n";
  log << "decompose (torus, depth " << depth << "): slope " << fmt(slope) << (ok ? "  pass" : "  FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int cmd_decompose(const json& cfg, const fs::path& out, std::uint64_t seed, std::ostream& log) {
  check_keys(cfg, {"recipe", "depth", "trunc", "theta", "shear", "offset", "potentials", "region", "transcript",
                   "grid_per_axis", "random_probes", "tolerances", "tamper_eps", "tamper_level", "stretch",
                   "write_transcript", "N", "L", "torus_potentials", "slope_margin"});
  const std::string recipe = get<std::string>(cfg, "recipe", "identity");
  if (recipe == "torus") return decompose_torus_recipe(cfg, out, seed, log);

  const int depth = get<int>(cfg, "depth", 2);
  const int trunc = get<int>(cfg, "trunc", depth + 1);
  if (depth < 0) throw ConfigError("depth must be nonnegative");
  if (trunc < depth + 1) throw ConfigError("trunc must be at least depth + 1");
  const PhaseSpace ps(1);
  Region region = Region::ball(Point::Zero(2), 1.0);
  if (cfg.contains("region")) {
    try {
      region = region_from_json(cfg.at("region"));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key 'region': ") + e.what());
    }
  }
  const StarContext ctx(ps, trunc);
  const double theta = get<double>(cfg, "theta", std::acos(-1.0) / 3.0);
  const double shear = get<double>(cfg, "shear", 0.0);
  const auto off = get<std::vector<double>>(cfg, "offset", {0.0, 0.0});
  if (off.size() != 2) throw ConfigError("offset must have two entries");
  Matrix R(2, 2), S(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  S << 1.0, shear, 0.0, 1.0;
  const auto kappa = SymplecticMap::linear(S * R, Point(Eigen::Vector2d(off[0], off[1])));
  std::vector<PolySymbol> pots = {PolySymbol::x(ps, 0) * PolySymbol::xi(ps, 0),
                                  PolySymbol::x(ps, 0) * PolySymbol::x(ps, 0)};
  if (cfg.contains("potentials")) {
    pots.clear();
    try {
      for (const auto& p : cfg.at("potentials")) pots.push_back(poly_from_json(p, ps));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key 'potentials': ") + e.what());
    }
  }

  DecomposeOptions opt;
  opt.depth = depth;
  opt.grid_per_axis = positive_int(cfg, "grid_per_axis", 33);
  opt.random_probes = get<int>(cfg, "random_probes", 4);
  opt.probe_seed = seed;
  double cert_tol = 1e-8;
  if (cfg.contains("tolerances")) {
    const json& t = cfg.at("tolerances");
    check_keys(t, {"kappa", "poisson", "derivation", "residual", "certificate"});
    opt.kappa_tol = positive(t, "kappa", opt.kappa_tol);
    opt.poisson_tol = positive(t, "poisson", opt.poisson_tol);
    opt.derivation_tol = positive(t, "derivation", opt.derivation_tol);
    opt.residual_tol = positive(t, "residual", opt.residual_tol);
    cert_tol = positive(t, "certificate", cert_tol);
  }

  std::optional<IsomorphismOracle> g;
  if (recipe == "identity") {
    g = identity_oracle(ps, region, trunc);
  } else if (recipe == "synthesized" || recipe == "rotation") {
    g = synthesize_oracle(kappa, pots, region, ctx);
  } else if (recipe == "tampered") {
    g = tampered_oracle(synthesize_oracle(kappa, pots, region, ctx), get<int>(cfg, "tamper_level", 1),
                        get<double>(cfg, "tamper_eps", 0.3));
  } else if (recipe == "nonsymplectic") {
    const double s = positive(cfg, "stretch", 2.0);
    g = pullback_oracle(SymplecticMap::linear(s * Matrix::Identity(2, 2)), region, trunc);
  } else if (recipe == "transcript") {
    const auto path = get<std::string>(cfg, "transcript", "");
    if (path.empty()) throw ConfigError("transcript recipe needs a 'transcript' path");
    g = oracle_from_transcript(load_config(path));
  } else {
    throw ConfigError("unknown recipe '" + recipe + "'");
  }

  fs::create_directories(out);
  if (get<bool>(cfg, "write_transcript", false)) write_file(out / "transcript.json", oracle_transcript(*g).dump(2) + "\n");
  try {
    const DecompositionResult r = decompose_full(*g, opt);
    json report = to_json(r);
    const bool ok = r.final_certificate <= cert_tol;
    report["command"] = "decompose";
    report["recipe"] = recipe;
    report["seed"] = seed;
    report["pass"] = ok;
    write_file(out / "decomposition.json", report.dump(2) + "\n");
    log << "kappa route disagreement " << fmt(r.kappa_route_disagreement) << "\n";
    log << "poisson defect           " << fmt(r.poisson_defect) << "\n";
    log << " l  closedness            derivation             residual_before        residual_after\n";
    for (const auto& l : r.levels)
      log << std::setw(2) << l.level << "  " << std::setw(22) << std::left << fmt(l.closedness_defect) << " "
          << std::setw(22) << fmt(l.derivation_defect) << " " << std::setw(22) << fmt(l.residual_before) << " "
          << fmt(l.residual_after) << std::right << "\n";
    log << "final certificate        " << fmt(r.final_certificate) << "\n";
    log << "decompose (" << recipe << "): " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 1;
  } catch (const StageError& e) {
    write_file(out / "decomposition.json", json{{"command", "decompose"},
                                                {"recipe", recipe},
                                                {"seed", seed},
                                                {"pass", false},
                                                {"failed_stage", e.stage()},
                                                {"error", e.what()}}
                                                   .dump(2) +
                                               "\n");
    log << "decompose (" << recipe << "): stage " << e.stage() << " failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace psido
