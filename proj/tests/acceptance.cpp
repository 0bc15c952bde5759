// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "loomata/cli.hpp"
#include "loomata/draft.hpp"
#include "loomata/io.hpp"
#include "loomata/metrics.hpp"
#include "loomata/raster.hpp"
#include "loomata/service.hpp"

using namespace loomata;

namespace {

constexpr double kEcaSeconds = 1.0;
constexpr double kConjugacySeconds = 5.0;
constexpr double kSweepSeconds = 1.0;
constexpr double kEntropyIdentityTol = 1e-12;
constexpr double kMaxEntropyRatioLo = 0.8, kMaxEntropyRatioHi = 1.25;
constexpr double kLowRatio = 0.1, kHighRatio = 10.0, kSkewedEntropyCap = 0.5;
constexpr double kDensityTol = 0.02;
constexpr int kMaxFloat = 5;
constexpr double kHMax = 4.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << what << "; ";
    pass = pass && ok;
  }
};

int failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what() << "; ";
  }
  std::printf("%s  %s  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

EvolutionConfig config(int width, int steps, Boundary boundary, InitSpec init) {
  EvolutionConfig c;
  c.width = width;
  c.steps = steps;
  c.boundary = boundary;
  c.init = std::move(init);
  return c;
}

// Wrap-boundary elementary step by direct lookup.
StateRow eca_oracle(int rule, const StateRow& row) {
  const Eigen::Index n = row.size();
  StateRow next(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = row((i + n - 1) % n), c = row(i), r = row((i + 1) % n);
    next(i) = static_cast<State>((rule >> (4 * l + 2 * c + r)) & 1);
  }
  return next;
}

StateMatrix random_cells(std::mt19937& gen, int rows, int cols) {
  StateMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<State>(gen() & 1);
  return m;
}

struct Runs {
  int max_weft = 0;  // horizontal 0-runs
  int max_warp = 0;  // vertical 1-runs
};

Runs scan_runs(const StateMatrix& m) {
  Runs out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    int run = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      run = m(r, c) == 0 ? run + 1 : 0;
      out.max_weft = std::max(out.max_weft, run);
    }
  }
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    int run = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      run = m(r, c) == 1 ? run + 1 : 0;
      out.max_warp = std::max(out.max_warp, run);
    }
  }
  return out;
}

int distinct_columns(const StateMatrix& m) {
  std::set<std::vector<State>> cols;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    std::vector<State> col(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) col[r] = m(r, c);
    cols.insert(col);
  }
  return static_cast<int>(cols.size());
}

// cell(pick, end) is warp-up when the end's shaft is lifted on that pick.
bool drawdown_matches(const LoomDraft& d, const StateMatrix& m) {
  if (static_cast<Eigen::Index>(d.threading.size()) != m.cols() ||
      static_cast<Eigen::Index>(d.liftplan.size()) != m.rows())
    return false;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto& lifted = d.liftplan[r];
      const bool up = std::find(lifted.begin(), lifted.end(), d.threading[c]) != lifted.end();
      if (up != (m(r, c) == 1)) return false;
    }
  return true;
}

void eca_correctness(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const auto grid =
      evolve(rule_from_wolfram_number(90), config(63, 31, Boundary::fixed(0), CenterInit{}));
  o.require(grid.rows() == 32 && grid.width() == 63, "rule 90 grid shape");
  bool pascal = true;
  for (int t = 0; t < 32; ++t)
    for (int c = 0; c < 63; ++c) {
      const int d = c - 31;
      int expected = 0;
      if (std::abs(d) <= t && (t + d) % 2 == 0) {
        const int m = (t + d) / 2;
        expected = (m & t) == m;
      }
      pascal = pascal && grid(t, c) == expected;
    }
  o.require(pascal, "rule 90 differs from Pascal mod 2");

  std::mt19937 gen(2024);
  const RuleSpec r110 = rule_from_wolfram_number(110);
  bool table = true;
  for (int i = 0; i < 1000; ++i) {
    const StateRow row = random_cells(gen, 1, 64).row(0);
    table = table && step(row, r110, Boundary::wrap()) == eca_oracle(110, row);
  }
  o.require(table, "rule 110 differs from the lookup oracle");
  const double s = seconds_since(start);
  o.require(s < kEcaSeconds, "too slow");
  o.detail << "1000 rows, " << s << " s";
}

void conjugacy(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const StateMatrix init =
      evolve(rule_from_wolfram_number(204), config(101, 0, Boundary::wrap(), RandomInit{11, 0.5})).cells();
  const StateMatrix mirrored_init = init.rowwise().reverse();
  const StateMatrix complemented_init = init.unaryExpr([](State s) { return State(1 - s); });
  int checks = 0, passed = 0;
  for (int n = 0; n < 256; ++n) {
    const RuleSpec rule = rule_from_wolfram_number(n);
    const StateMatrix base = evolve(rule, config(101, 50, Boundary::wrap(), ExplicitInit{init})).cells();
    const StateMatrix m =
        evolve(mirror_rule(rule), config(101, 50, Boundary::wrap(), ExplicitInit{mirrored_init})).cells();
    const StateMatrix c =
        evolve(complement_rule(rule), config(101, 50, Boundary::wrap(), ExplicitInit{complemented_init}))
            .cells();
    checks += 2;
    passed += m == base.rowwise().reverse();
    passed += c == base.unaryExpr([](State s) { return State(1 - s); });
  }
  const double s = seconds_since(start);
  o.require(checks == 512 && passed == checks, "conjugacy mismatch");
  o.require(s < kConjugacySeconds, "too slow");
  o.detail << passed << "/" << checks << " equalities, " << s << " s";
}

void figure_reproduction(Outcome& o) {
  EvolutionConfig cfg = config(101, 50, Boundary::wrap(), RandomInit{1, 0.5});
  const auto start = std::chrono::steady_clock::now();
  const auto sweep = sweep_elementary(cfg);
  const double s = seconds_since(start);
  o.require(sweep.size() == 256, "sweep size");

  double worst = 0.0, max_entropy = -1.0;
  for (const auto& m : sweep) {
    max_entropy = std::max(max_entropy, m.entropy);
    if (m.ratio.is_infinite()) continue;
    const double h = m.ratio.value();
    worst = std::max(worst, std::abs(m.entropy - binary_entropy(h / (1.0 + h))));
  }
  o.require(worst <= kEntropyIdentityTol, "entropy identity");

  int top = 0;
  for (const auto& m : sweep) {
    if (m.entropy != max_entropy) continue;
    ++top;
    o.require(!m.ratio.is_infinite() && m.ratio.value() >= kMaxEntropyRatioLo &&
                  m.ratio.value() <= kMaxEntropyRatioHi,
              "max-H rule " + m.rule_id + " outside the ratio window");
  }
  for (const auto& m : sweep) {
    const bool skewed = m.ratio.is_infinite() || m.ratio.value() < kLowRatio || m.ratio.value() > kHighRatio;
    if (skewed) o.require(m.entropy <= kSkewedEntropyCap, "skewed rule " + m.rule_id + " has high H");
  }

  const EntropyRatioTable table = entropy_ratio_table(sweep);
  const auto in_gutter = [&](int rule) {
    return std::any_of(table.gutter.begin(), table.gutter.end(),
                       [&](const EntropyRatioRow& r) { return r.rule == rule; });
  };
  o.require(in_gutter(0) && in_gutter(255), "rules 0 and 255 not in the gutter");
  o.require(table.size() == 256, "table size");
  o.require(s < kSweepSeconds, "sweep too slow");
  o.detail << "max |H - be| " << worst << ", " << top << " max-H rules, gutter " << table.gutter.size()
           << ", sweep " << s << " s";
}

void weave_gate(Outcome& o) {
  const EvolutionConfig cfg = config(101, 50, Boundary::wrap(), RandomInit{1, 0.5});
  const auto sweep = sweep_elementary(cfg);
  const StateRow init =
      evolve(rule_from_wolfram_number(204), config(101, 0, Boundary::wrap(), RandomInit{1, 0.5})).cells().row(0);
  int agree = 0;
  for (int n = 0; n < 256; ++n) {
    StateMatrix generated(50, 101);
    StateRow row = init;
    for (int t = 0; t < 50; ++t) {
      row = eca_oracle(n, row);
      generated.row(t) = row;
    }
    const long ones = generated.cast<long>().sum();
    const long zeros = generated.size() - ones;
    const bool ratio_ok =
        zeros > 0 && double(ones) / double(zeros) >= 1.0 / kHMax && double(ones) / double(zeros) <= kHMax;
    const Runs runs = scan_runs(generated);
    const bool expected = ratio_ok && runs.max_warp <= kMaxFloat && runs.max_weft <= kMaxFloat;
    if (sweep[n].weaveable == expected) ++agree;
    else o.require(false, "rule " + std::to_string(n) + " disagrees");
  }
  o.detail << agree << "/256 flags agree";
}

void factorization(Outcome& o) {
  std::mt19937 gen(1234);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const StateMatrix m = random_cells(gen, 16, 16);
    const LoomDraft d = factorize(Drawdown(PatternGrid(m, 2)));
    if (drawdown_matches(d, m) && d.shaft_count == distinct_columns(m)) ++ok;
  }
  o.require(ok == 1000, "reconstruction or shaft count mismatch");
  o.detail << ok << "/1000 drawdowns";
}

void wif_round_trip(Outcome& o) {
  std::vector<std::pair<std::string, StateMatrix>> cases;
  StateMatrix plain(4, 4), twill(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      plain(r, c) = State((r + c) % 2);
      twill(r, c) = State(((c - r + 4) % 4) < 2);
    }
  cases.emplace_back("plain", plain);
  cases.emplace_back("twill", twill);
  std::mt19937 gen(77);
  for (int i = 0; i < 20; ++i) {
    const int rule = static_cast<int>(gen() % 256);
    const auto grid = evolve(rule_from_wolfram_number(rule),
                             config(24, 20, Boundary::wrap(), RandomInit{gen(), 0.5}));
    cases.emplace_back("rule " + std::to_string(rule), grid.cells());
  }
  int ok = 0;
  for (const auto& [name, m] : cases) {
    const LoomDraft parsed = parse_wif(export_wif(factorize(Drawdown(PatternGrid(m, 2)))));
    if (drawdown_matches(parsed, m) && reconstruct(parsed.threading, parsed.liftplan) == m) ++ok;
    else o.require(false, name + " does not round-trip");
  }
  o.detail << ok << "/" << cases.size() << " drafts";
}

void raster(Outcome& o) {
  LumaMatrix gradient(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) gradient(y, x) = (x + 0.5) / 64.0;
  RasterConfig cfg;
  cfg.method = ErrorDiffusion{};
  const PatternGrid grid = rasterize(gradient, cfg);
  const double density = grid.cells().cast<double>().mean();
  o.require(std::abs(density - 0.5) <= kDensityTol, "density outside tolerance");

  const auto weave = WeavabilityConfig::symmetric(kHMax, kMaxFloat);
  const LumaMatrix white = LumaMatrix::Ones(64, 64);
  RasterConfig threshold;
  threshold.method = FixedThreshold{};
  int worst = 0;
  for (const auto& [luma, c] : {std::pair{gradient, cfg}, std::pair{white, threshold}}) {
    const auto repaired = weavable_rasterize(luma, c, weave, true);
    const Runs runs = scan_runs(repaired.grid.cells());
    worst = std::max({worst, runs.max_warp, runs.max_weft});
  }
  std::mt19937 gen(5);
  for (int i = 0; i < 200; ++i) {
    StateMatrix m = random_cells(gen, 24, 24);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (gen() % 4 == 0) m.row(r).setZero();
    repair_floats(m, kMaxFloat);
    const Runs runs = scan_runs(m);
    worst = std::max({worst, runs.max_warp, runs.max_weft});
  }
  o.require(worst <= kMaxFloat, "run longer than max_float after repair");
  o.detail << "density " << density << ", longest run after repair " << worst;
}

void generalized(Outcome& o) {
  int same = 0;
  for (int n = 0; n < 256; ++n) {
    std::vector<State> table(64);
    for (int word = 0; word < 64; ++word) table[word] = State((n >> (word & 7)) & 1);
    const auto wide =
        evolve(rule_from_table(2, 1, 2, table), config(101, 50, Boundary::wrap(), RandomInit{1, 0.5}));
    const StateMatrix newest = wide.cells().row(1);
    const auto narrow =
        evolve(rule_from_wolfram_number(n), config(101, 50, Boundary::wrap(), ExplicitInit{newest}));
    if (wide.cells().bottomRows(50) == narrow.cells().bottomRows(50)) ++same;
  }
  o.require(same == 256, "window-2 rule differs from its window-1 counterpart");

  std::vector<State> parity(64);
  for (int word = 0; word < 64; ++word) parity[word] = State(__builtin_popcount(word) & 1);
  const RuleSpec rule = rule_from_table(2, 1, 2, parity);
  const RuleSpec rebuilt = rule_from_id(2, 1, 2, rule.id());
  const auto cfg = config(101, 50, Boundary::wrap(), RandomInit{1, 0.5});
  const auto a = evolve(rule, cfg);
  o.require(rebuilt == rule, "hex id does not round-trip");
  o.require(a == evolve(rule, cfg) && a == evolve(rebuilt, cfg), "parity rule not deterministic");
  bool xor_ok = true;
  const StateMatrix& m = a.cells();
  for (int t = 2; t < m.rows(); ++t)
    for (int c = 0; c < 101; ++c) {
      int x = 0;
      for (int row = t - 2; row < t; ++row)
        for (int d = -1; d <= 1; ++d) x ^= m(row, (c + d + 101) % 101);
      xor_ok = xor_ok && m(t, c) == x;
    }
  o.require(xor_ok, "parity recurrence");
  o.detail << same << "/256 rules, parity id " << rule.id();
}

void cli_service(Outcome& o) {
  const std::vector<std::string> args{"loomata", "sweep", "--width", "101", "--steps", "50", "--seed", "1",
                                      "--h-max", "4", "--max-float", "5"};
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  o.require(code == kExitOk, "cli exit " + std::to_string(code));

  DesignService service;
  HttpRequest req;
  req.method = "GET";
  req.path = "/api/rules/elementary";
  req.query = {{"width", "101"}, {"steps", "50"}, {"seed", "1"}, {"hmax", "4"}, {"maxfloat", "5"}};
  const HttpResponse res = service.handle(req);
  o.require(res.status == 200, "service status " + std::to_string(res.status));
  const Json csv = parse_sweep_csv(out.str());
  const Json payload = res.json()["rules"];
  o.require(csv.size() == 256 && payload.size() == 256, "row count");
  int fields = 0;
  for (std::size_t i = 0; i < std::min(csv.size(), payload.size()); ++i)
    for (const auto& [key, value] : csv[i].items()) {
      o.require(payload[i].contains(key) && payload[i][key] == value,
                "row " + std::to_string(i) + " field " + key);
      ++fields;
    }
  o.require(csv == payload, "payloads differ");
  o.detail << fields << " fields compared";
}

}  // namespace

int main() {
  criterion("eca-correctness", eca_correctness);
  criterion("conjugacy", conjugacy);
  criterion("entropy-ratio-figure", figure_reproduction);
  criterion("weaveability-gate", weave_gate);
  criterion("draft-factorization", factorization);
  criterion("wif-round-trip", wif_round_trip);
  criterion("raster-density-and-repair", raster);
  criterion("generalized-automaton", generalized);
  criterion("cli-service-equivalence", cli_service);
  return failures;
}
