#include <openssl/evp.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "otuniq/io.hpp"

using namespace otuniq;
using io::ojson;

namespace {

// Exit statuses. 1 is used only when a requested verification fails.
constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitNonUnique = 10;
constexpr int kExitInconclusive = 11;
constexpr int kExitOracleDisagrees = 20;

struct Flags {
  std::string input;
  std::string out;
  std::optional<double> epsilon;
  bool labels = false;
  std::string oracle;     // "", "on", "off"
  std::string semantics;  // "", "finite", "continuum"
  bool exact = false;
  std::optional<std::int64_t> seed;
  std::string verify;
  std::string report;
  std::size_t samples = 25;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Parse, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::Internal, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 15];
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Parse, "cannot write '" + path + "'");
  out << text;
}

void emit(const ojson& doc, const std::string& path) { write_text(path, doc.dump(2) + "\n"); }

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Parse:
    case ErrorCode::MissingEpsilon:
    case ErrorCode::BadEpsilon:
    case ErrorCode::ExactUnsupported:
      return kExitParse;
    default:
      return kExitSolver;
  }
}

/// Loaded input plus command-line overrides folded into the options.
struct Input {
  std::string text;
  std::string digest;
  io::ProblemDocument doc;
};

Input load(const Flags& flags) {
  Input in{read_file(flags.input), {}, {}};
  in.digest = sha256_hex(in.text);
  in.doc = io::ProblemDocument::parse(in.text);
  auto& opt = in.doc.options();
  if (flags.epsilon) opt.epsilon = flags.epsilon;
  if (flags.labels) opt.labels = true;
  if (!flags.oracle.empty()) opt.oracle = flags.oracle == "on";
  if (flags.semantics == "finite") opt.semantics = Semantics::Finite;
  if (flags.semantics == "continuum") opt.semantics = Semantics::Continuum;
  if (flags.exact) opt.exact = true;
  if (flags.seed) opt.seed = flags.seed;
  return in;
}

std::optional<DecompositionMethod> method_of(const io::DocumentOptions& opt) {
  if (opt.epsilon) return EpsilonGraph{*opt.epsilon};
  if (opt.labels) return ExplicitLabels{};
  return std::nullopt;
}

ExactProblem exact_problem(const io::ProblemDocument& doc) {
  auto parts = doc.exact_parts();
  return ExactProblem(std::move(parts.source), std::move(parts.target), std::move(parts.cost));
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ solve

int cmd_solve(const Flags& flags) {
  const auto in = load(flags);
  const auto& opt = in.doc.options();
  ojson report = io::header("solve", in.digest, opt);
  bool verified = true;
  if (opt.exact) {
    const auto p = exact_problem(in.doc);
    const auto cert = certify_exact(p);
    report["arithmetic"] = "exact";
    report["solve"] = io::exact_solve_json(cert);
    if (!flags.verify.empty()) {
      const auto rep = io::Document::parse(read_file(flags.verify));
      std::vector<ExactPlanEntry> plan = cert.plan;
      if (rep.root().contains("solve") && rep.root()["solve"].contains("plan")) {
        plan.clear();
        const io::Node rows(rep, rep.root()["solve"]["plan"], "/solve/plan");
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const auto r = rows.at(k);
          plan.push_back({std::size_t(r.at(0).integer()), std::size_t(r.at(1).integer()), r.at(2).rational()});
        }
      }
      ojson checks = ojson::array();
      for (const auto& rp : io::reported_pairs(rep)) {
        const auto r = verify_duality_exact(p, plan, ExactPair{rp.f.rationals(), rp.g.rationals()});
        verified = verified && r.optimal;
        checks.push_back({{"pointer", rp.pointer}, {"report", io::to_json(r)}});
      }
      verified = verified && !checks.empty();
      report["verification"] = {{"source", flags.verify}, {"all_optimal", verified}, {"pairs", checks}};
    }
  } else {
    const auto p = in.doc.problem();
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = solve(p, opt.tol);
    spdlog::info("solved {}x{} in {:.1f} ms, {} pivots", p.source.size(), p.target.size(), elapsed_ms(t0),
                 s.iterations);
    report["arithmetic"] = "floating";
    report["solve"] = io::to_json(s);
    report["solve"]["duality"] = io::to_json(verify_duality(p, s.plan, s.pair, opt.tol));
    if (!flags.verify.empty()) {
      const auto rep = io::Document::parse(read_file(flags.verify));
      TransportPlan plan = s.plan;
      if (rep.root().contains("solve") && rep.root()["solve"].contains("plan")) {
        std::vector<PlanEntry> entries;
        const io::Node rows(rep, rep.root()["solve"]["plan"], "/solve/plan");
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const auto r = rows.at(k);
          entries.push_back({std::size_t(r.at(0).integer()), std::size_t(r.at(1).integer()), r.at(2).number()});
        }
        plan = TransportPlan(p.source.size(), p.target.size(), std::move(entries));
      }
      ojson checks = ojson::array();
      for (const auto& rp : io::reported_pairs(rep)) {
        const auto r = verify_duality(p, plan, PotentialPair{rp.f.potentials(), rp.g.potentials()}, opt.tol);
        verified = verified && r.optimal;
        checks.push_back({{"pointer", rp.pointer}, {"report", io::to_json(r)}});
      }
      verified = verified && !checks.empty();
      report["verification"] = {{"source", flags.verify}, {"all_optimal", verified}, {"pairs", checks}};
    }
  }
  emit(report, flags.out);
  return verified ? kExitOk : kExitVerifyFailed;
}

// ---------------------------------------------------------------- certify

bool exact_oracles_agree(const ExactCertificate& cert, const OracleCheck& check) {
  if (cert.verdict == Verdict::Inconclusive || !check.connectivity) return false;
  const bool unique = cert.verdict == Verdict::Unique;
  return check.connectivity->unique == unique && (!check.face || check.face->unique == unique);
}

int certify_exit(Verdict v) {
  switch (v) {
    case Verdict::Unique: return kExitOk;
    case Verdict::NonUnique: return kExitNonUnique;
    case Verdict::Inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

int cmd_certify(const Flags& flags) {
  const auto in = load(flags);
  const auto& opt = in.doc.options();
  ojson report = io::header("certify", in.digest, opt);
  const auto t0 = std::chrono::steady_clock::now();
  Verdict verdict;
  bool agrees = true;
  bool oracle_ran = false;

  if (opt.exact) {
    if (opt.semantics != Semantics::Finite)
      fail(ErrorCode::ExactUnsupported, "exact mode decides the finite problem only");
    const auto p = exact_problem(in.doc);
    const auto cert = certify_exact(p);
    verdict = cert.verdict;
    report["arithmetic"] = "exact";
    report["solve"] = io::exact_solve_json(cert);
    report["certificate"] = io::to_json(cert);
    if (opt.oracle) {
      CertifyOptions co;
      co.tol = opt.tol;
      const auto approx = certify(p.approximate(), co);
      OracleCheck check = approx.oracle;
      check.agrees = exact_oracles_agree(cert, check);
      check.note = "oracles run on the nearest floating-point problem";
      agrees = check.agrees;
      oracle_ran = true;
      report["oracle"] = io::to_json(check);
    } else {
      report["oracle"] = io::to_json(OracleCheck{});
    }
  } else {
    const auto p = in.doc.problem();
    CertifyOptions co;
    co.method = method_of(opt);
    co.semantics = opt.semantics;
    co.oracle = opt.oracle;
    co.tol = opt.tol;
    const auto cert = certify(p, co);
    verdict = cert.verdict;
    agrees = cert.oracle.agrees;
    oracle_ran = cert.oracle.ran;
    report["arithmetic"] = "floating";
    report["solve"] = io::to_json(cert.solved);
    report["certificate"] = io::to_json(cert);
    report["oracle"] = io::to_json(cert.oracle);
  }
  spdlog::info("certify: {} in {:.1f} ms", to_string(verdict), elapsed_ms(t0));
  emit(report, flags.out);

  if (oracle_ran && !agrees) {
    const std::string path = (flags.out.empty() || flags.out == "-" ? std::string("otuniq") : flags.out) +
                             ".bugreport.json";
    ojson bug;
    bug["kind"] = "oracle_disagreement";
    bug["tool"] = report["tool"];
    bug["input_digest"] = report["input_digest"];
    bug["input"] = in.text;
    bug["report"] = report;
    emit(bug, path);
    std::cerr << "otuniq: oracle disagreement, details in " << path << "\n";
    return kExitOracleDisagrees;
  }
  return certify_exit(verdict);
}

// ---------------------------------------------------------------- witness

int cmd_witness(const Flags& flags) {
  const auto in = load(flags);
  const auto& opt = in.doc.options();
  const auto p = in.doc.problem();
  auto method = method_of(opt);
  if (!method) {
    if (!p.source.labels()) fail(ErrorCode::MissingEpsilon, "witness needs --epsilon or labelled points");
    method = ExplicitLabels{};
  }
  const auto components = decompose(p.source, *method);
  const auto w = ambiguity_witness(p, components, flags.samples, opt.oracle, opt.tol);
  ojson report = io::header("witness", in.digest, opt);
  report["method"] = describe(*method);
  // Every family member is optimal for the identity plan; recording it lets
  // `solve --verify` check the samples against it.
  report["solve"] = {{"plan", io::to_json(TransportPlan::identity(p.source))}};
  report["witness"] = io::to_json(w);
  emit(report, flags.out);
  return w.all_optimal ? kExitOk : kExitVerifyFailed;
}

// ------------------------------------------------------------- regularity

std::vector<Point> grid_of(const io::Node& r) {
  const auto g = r["grid"];
  if (g.has("points")) {
    std::vector<Point> pts;
    const auto list = g["points"];
    for (std::size_t k = 0; k < list.size(); ++k) pts.push_back(list.at(k).numbers());
    return pts;
  }
  return box_grid(g["lo"].numbers(), g["hi"].numbers(), g["counts"].counts());
}

int cmd_regularity(const Flags& flags) {
  const auto in = load(flags);
  const auto& opt = in.doc.options();
  const auto r = in.doc.node()["regularity"];
  const std::string mode = r["mode"].text();
  ojson report = io::header("regularity", in.digest, opt);
  report["mode"] = mode;
  report["note"] = "grid-scale diagnostic; does not enter any uniqueness verdict";
  std::ostringstream csv;

  if (mode == "dominated") {
    r.allow_keys({"mode", "x", "y", "grid"});
    const auto grid = grid_of(r);
    const auto region = dominated_region(r["x"].numbers(), r["y"].numbers(), in.doc.cost(), grid);
    std::vector<double> v(region.member.begin(), region.member.end());
    write_csv(csv, grid, v);
    std::size_t members = 0;
    for (char m : region.member) members += m;
    report["members"] = members;
    report["grid_points"] = grid.size();
  } else if (mode == "asymptotic") {
    r.allow_keys({"mode", "x", "direction", "radii", "grid", "value"});
    const auto grid = grid_of(r);
    const auto region = asymptotic_region(r["x"].numbers(), r["direction"].numbers(), in.doc.cost(),
                                          r["radii"].numbers(), grid);
    const bool whole = r.has("value") && r["value"].text() == "frequency";
    write_csv(csv, grid, whole ? region.frequency : region.tail_frequency);
    std::size_t members = 0;
    for (char m : region.tail_member) members += m;
    report["value"] = whole ? "frequency" : "tail_frequency";
    report["tail_members"] = members;
    report["grid_points"] = grid.size();
    report["direction"] = io::nums(region.direction);
  } else if (mode == "escape") {
    r.allow_keys({"mode", "targets"});
    const auto mu = in.doc.measure("source");
    const auto list = r["targets"];
    std::vector<TruncatedTarget> family;
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto t = list.at(k);
      std::vector<Point> pts;
      const auto pl = t["points"];
      for (std::size_t s = 0; s < pl.size(); ++s) pts.push_back(pl.at(s).numbers());
      family.push_back({t["radius"].number(), DiscreteMeasure(pts, t["weights"].numbers())});
    }
    const auto diag = escape_diagnostic(mu, family, in.doc.cost(), opt.tol);
    std::vector<double> v(diag.flagged.begin(), diag.flagged.end());
    write_csv(csv, mu.points(), v);
    report["radii"] = io::nums(diag.radii);
    report["flagged"] = io::indices([&] {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < diag.flagged.size(); ++i)
        if (diag.flagged[i]) out.push_back(i);
      return out;
    }());
    report["final_score"] = io::nums(diag.score.back());
  } else if (mode == "gradient") {
    r.allow_keys({"mode"});
    const auto p = in.doc.problem();
    const auto s = solve(p, opt.tol);
    const auto g = gradient_identity_check(p, s);
    std::vector<Point> pts;
    std::vector<double> v;
    for (const auto& e : g.entries) {
      pts.push_back(p.source.point(e.source));
      v.push_back(e.deviation);
    }
    write_csv(csv, pts, v);
    report["gradient"] = io::to_json(g);
  } else {
    io::schema_error(r["mode"].pointer(), "unknown mode '" + mode + "'");
  }
  write_text(flags.out, csv.str());
  if (!flags.report.empty()) emit(report, flags.report);
  return kExitOk;
}

// -------------------------------------------------------------- ctransform

int cmd_ctransform(const Flags& flags) {
  const auto in = load(flags);
  const auto p = in.doc.problem();
  const auto cost = p.bound();
  Direction dir = Direction::ToTarget;
  std::vector<double> values;
  if (in.doc.node().has("ctransform")) {
    const auto c = in.doc.node()["ctransform"];
    c.allow_keys({"direction", "values"});
    if (auto d = c.find("direction")) {
      const auto v = d->text();
      if (v == "to_source") dir = Direction::ToSource;
      else if (v != "to_target") io::schema_error(d->pointer(), "expected \"to_source\" or \"to_target\"");
    }
    if (auto v = c.find("values")) values = v->potentials();
  }
  const auto& out_side = dir == Direction::ToTarget ? p.target : p.source;
  const std::size_t in_size = dir == Direction::ToTarget ? p.source.size() : p.target.size();
  if (values.empty()) values.assign(in_size, 0.0);
  const auto out = c_transform(values, cost, dir);
  std::ostringstream csv;
  write_csv(csv, out_side.points(), out);
  write_text(flags.out, csv.str());
  return kExitOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("otuniq");
  logger->set_pattern("otuniq [%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("OTUNIQ_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept what was asked for.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Uniqueness certificates for Kantorovich potentials of finite transport problems"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub) {
    sub->add_option("input", flags.input, "problem document (schema 1)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output path (default stdout)");
    sub->add_option("--seed", flags.seed, "seed recorded in the report");
    sub->add_flag("--exact", flags.exact, "read numbers as exact rationals");
  };
  auto decomposition = [&](CLI::App* sub) {
    sub->add_option("--epsilon", flags.epsilon, "epsilon-graph component threshold")->check(CLI::PositiveNumber);
    sub->add_flag("--labels", flags.labels, "use the component labels in the document");
    sub->add_option("--oracle", flags.oracle, "run the independent oracles")->check(CLI::IsMember({"on", "off"}));
  };

  auto* s = app.add_subcommand("solve", "solve the transport problem and write plan and potentials");
  common(s);
  s->add_option("--verify", flags.verify, "re-verify every potential pair found in this report");
  auto* c = app.add_subcommand("certify", "decide uniqueness of the potentials");
  common(c);
  decomposition(c);
  c->add_option("--semantics", flags.semantics, "finite or continuum")->check(CLI::IsMember({"finite", "continuum"}));
  auto* w = app.add_subcommand("witness", "sample the two-component ambiguity family");
  common(w);
  decomposition(w);
  w->add_option("--samples", flags.samples, "number of family members")->check(CLI::Range(2, 100000));
  auto* r = app.add_subcommand("regularity", "grid diagnostics written as CSV");
  common(r);
  r->add_option("--report", flags.report, "also write a JSON summary here");
  auto* t = app.add_subcommand("ctransform", "c-transform of the values in the document, as CSV");
  common(t);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (*s) return cmd_solve(flags);
    if (*c) return cmd_certify(flags);
    if (*w) return cmd_witness(flags);
    if (*r) return cmd_regularity(flags);
    if (*t) return cmd_ctransform(flags);
  } catch (const Error& e) {
    std::cerr << "otuniq: error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "otuniq: error: internal: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitParse;
}
