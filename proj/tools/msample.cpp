// Command-line front end: manifold samplers, conditional tests, and the
// calibration suites, with seeded, byte-reproducible CSV/JSON output.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "manifold/common.hpp"
#include "manifold/gamma_manifold.hpp"
#include "manifold/mc_validation.hpp"
#include "manifold/moment_manifold.hpp"
#include "manifold/pitfall.hpp"
#include "manifold/stats_util.hpp"
#include "manifold/torus.hpp"

namespace {

using manifold::format_g17;
using nlohmann::json;

// Temp-file-plus-rename so a crashed run never leaves a half-written output.
void write_atomically(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw manifold::InputError("cannot open output file: " + tmp.string());
    out << content;
    if (!out) throw manifold::InputError("failed writing output file: " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

struct TorusArgs {
  std::int64_t n = 1000;
  double big_r = 1.0;
  double small_r = 0.9;
  std::uint64_t seed = 0;
  std::string method = "area";
  std::string envelope = "tight";
  std::string format = "csv";
  std::string out;
};

int run_torus(const TorusArgs& args) {
  manifold::TorusParams params{args.big_r, args.small_r};
  params.validate();
  if (args.n < 1) throw manifold::InputError("torus: --n must be >= 1");
  manifold::Rng rng(args.seed);

  std::vector<manifold::TorusSample> samples;
  if (args.method == "area") {
    const auto env = args.envelope == "loose" ? manifold::TorusEnvelope::Loose
                                              : manifold::TorusEnvelope::Tight;
    samples = sample_torus_area(args.n, params, env, rng);
  } else {
    samples = sample_torus_naive(args.n, params, rng);
  }

  const json config = {{"command", "torus"},   {"n", args.n},       {"R", args.big_r},
                       {"r", args.small_r},    {"seed", args.seed}, {"method", args.method},
                       {"envelope", args.envelope}, {"format", args.format}};
  if (args.format == "json") {
    json rows = json::array();
    for (const auto& s : samples)
      rows.push_back({{"theta", s.theta},
                      {"psi", s.psi},
                      {"x", s.point[0]},
                      {"y", s.point[1]},
                      {"z", s.point[2]},
                      {"method", to_string(s.method)}});
    write_atomically(args.out, json({{"config", config}, {"samples", rows}}).dump(2) + "\n");
    return 0;
  }
  std::ostringstream csv;
  csv << "# config " << config.dump() << "\n";
  csv << "theta,psi,x,y,z,method\n";
  for (const auto& s : samples) {
    csv << format_g17(s.theta) << ',' << format_g17(s.psi) << ',' << format_g17(s.point[0]) << ','
        << format_g17(s.point[1]) << ',' << format_g17(s.point[2]) << ',' << to_string(s.method)
        << "\n";
  }
  write_atomically(args.out, csv.str());
  return 0;
}

struct GammaArgs {
  int n = 4;
  double sum = 0.0;
  double product = 0.0;
  manifold::ChainConfig cfg;
  std::string mode = "area";
  std::string format = "csv";
  std::string out;
};

int run_gamma(const GammaArgs& args) {
  manifold::GammaConstraint constraint;
  constraint.n = args.n;
  constraint.sum = args.sum;
  constraint.product = args.product;
  constraint.validate();

  manifold::ChainConfig cfg = args.cfg;
  if (cfg.eps <= 0.0) cfg.eps = manifold::default_gamma_eps(constraint);
  cfg.validate();

  const auto target = args.mode == "conditional" ? manifold::GammaTarget::Conditional
                                                 : manifold::GammaTarget::Area;
  const manifold::GammaChainResult result = gamma_metropolis_chain(constraint, cfg, target);

  const json config = {{"command", "gamma"},     {"n", args.n},
                       {"S", args.sum},          {"P", args.product},
                       {"steps", cfg.steps},     {"burnin", cfg.burnin},
                       {"thin", cfg.thin},       {"eps", cfg.eps},
                       {"seed", cfg.seed},       {"mode", args.mode},
                       {"format", args.format}};
  manifold::Rng emit_rng(manifold::detail::splitmix64(cfg.seed ^ 0x5ca1ab1eULL));
  if (args.format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < result.states.size(); ++i) {
      const Eigen::VectorXd x = randomize_symmetry(result.states[i], emit_rng);
      rows.push_back({{"x", vector_to_json(x)},
                      {"logdensity", result.log_densities[i]},
                      {"accepted", static_cast<bool>(result.accepted[i])}});
    }
    write_atomically(args.out, json({{"config", config}, {"states", rows}}).dump(2) + "\n");
    return 0;
  }
  std::ostringstream csv;
  csv << "# config " << config.dump() << "\n";
  for (int i = 1; i <= args.n; ++i) csv << 'x' << i << ',';
  csv << "logdensity,accepted\n";
  for (std::size_t i = 0; i < result.states.size(); ++i) {
    const Eigen::VectorXd x = randomize_symmetry(result.states[i], emit_rng);
    for (Eigen::Index j = 0; j < x.size(); ++j) csv << format_g17(x(j)) << ',';
    csv << format_g17(result.log_densities[i]) << ',' << (result.accepted[i] ? 1 : 0) << "\n";
  }
  write_atomically(args.out, csv.str());
  return 0;
}

struct NeymanArgs {
  std::string data_path;
  std::string format = "json";
  std::int64_t b_replicates = 99;
  std::int64_t t_steps = 500;
  double eps = 0.05;
  std::uint64_t seed = 0;
  std::string statistic = "legendre5";
  std::string out;
};

int run_neyman(const NeymanArgs& args) {
  if (args.format != "json")
    throw manifold::InputError("neyman: --format supports only json");
  std::ifstream in(args.data_path);
  if (!in) throw manifold::InputError("neyman: cannot open data file: " + args.data_path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    values.push_back(std::stod(line));
  }
  Eigen::VectorXd data = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));

  manifold::ChainConfig cfg;
  cfg.seed = args.seed;
  cfg.eps = args.eps;
  const auto statistic = args.statistic == "custom" ? manifold::NeymanStatistic::FifthPowerSum
                                                    : manifold::NeymanStatistic::Legendre5;
  const manifold::TestReport report =
      neyman_smooth_gof(data, cfg, args.b_replicates, args.t_steps, statistic);

  json rejections = json::object();
  for (const auto& [reason, count] : report.rejection_counts) rejections[reason] = count;
  const json config = {{"command", "neyman"}, {"data", args.data_path},
                       {"B", args.b_replicates}, {"T", args.t_steps},
                       {"eps", args.eps},      {"seed", args.seed},
                       {"statistic", args.statistic}, {"format", args.format}};
  const json doc = {{"config", config},
                    {"statistic_observed", report.statistic_observed},
                    {"statistic_replicates", report.statistic_replicates},
                    {"rank", report.rank},
                    {"p_value", report.p_value},
                    {"tie_policy", report.tie_policy},
                    {"rejection_counts", rejections},
                    {"seed", report.seed}};
  write_atomically(args.out, doc.dump(2) + "\n");
  return 0;
}

struct PitfallArgs {
  std::string demo = "path3";
  std::string format = "json";
  int n = 10;
  std::uint64_t seed = 0;
  std::string out;
};

int run_pitfall(const PitfallArgs& args) {
  if (args.format != "json")
    throw manifold::InputError("pitfall: --format supports only json");
  manifold::NeighborhoodSystem sys;
  if (args.demo == "path3") {
    sys = manifold::path3_demo();
  } else {
    manifold::Rng rng(args.seed);
    sys = manifold::random_system(args.n, true, rng);
  }
  const manifold::PitfallReport report = verify_pitfall(sys);

  const json config = {
      {"command", "pitfall"}, {"demo", args.demo}, {"n", sys.size()}, {"seed", args.seed}};
  const json doc = {{"config", config},
                    {"pi", vector_to_json(sys.pi)},
                    {"sigma_formula", vector_to_json(report.sigma_formula)},
                    {"sigma_empirical", vector_to_json(report.sigma_empirical)},
                    {"formula_error", report.formula_error},
                    {"bias", report.bias},
                    {"pi_neighborhood_constant", report.pi_neighborhood_constant},
                    {"metropolized_ok", report.metropolized_error < 1e-10},
                    {"metropolized_error", report.metropolized_error}};
  write_atomically(args.out, doc.dump(2) + "\n");
  return 0;
}

struct ValidateArgs {
  std::uint64_t seed = 0;
  std::string format = "json";
  std::string out;
  bool quick = false;
};

// Calibration suites: Metropolis acceptance frequencies, the square-root
// acceptance rule, exchangeable-serial-test uniformity with an iid chain,
// and the torus sampler pair under KS.
int run_validate(const ValidateArgs& args) {
  if (args.format != "json")
    throw manifold::InputError("validate: --format supports only json");
  json suites = json::object();
  bool all_ok = true;

  {  // metropolis acceptance at fixed log-ratios
    manifold::Rng rng(args.seed + 1);
    const int trials = args.quick ? 20000 : 100000;
    json entries = json::array();
    bool ok = true;
    for (double delta : {-2.0, -0.5, 0.0, 1.0}) {
      const double expect = std::min(1.0, std::exp(delta));
      int accepted = 0;
      for (int i = 0; i < trials; ++i)
        if (manifold::metropolis_step(0.0, delta, rng)) ++accepted;
      const double rate = static_cast<double>(accepted) / trials;
      const double sigma = std::sqrt(expect * (1.0 - expect) / trials);
      const bool pass = std::fabs(rate - expect) <= 3.0 * sigma + 1e-15;
      ok = ok && pass;
      entries.push_back({{"delta", delta}, {"rate", rate}, {"expected", expect}, {"pass", pass}});
    }
    suites["metropolis_acceptance"] = {{"trials", trials}, {"cases", entries}, {"pass", ok}};
    all_ok = all_ok && ok;
  }

  {  // square-root acceptance rule at the pinned Jacobian ratios
    manifold::Rng rng(args.seed + 2);
    const int trials = args.quick ? 20000 : 100000;
    json entries = json::array();
    bool ok = true;
    for (double ratio : {0.04, 0.25, 1.0, 4.0}) {
      const double expect = std::min(1.0, std::sqrt(ratio));
      int accepted = 0;
      for (int i = 0; i < trials; ++i)
        if (manifold::moment_accept(ratio, 1.0, rng)) ++accepted;
      const double rate = static_cast<double>(accepted) / trials;
      const double sigma = std::sqrt(expect * (1.0 - expect) / trials);
      const bool pass = std::fabs(rate - expect) <= 3.0 * sigma + 1e-15;
      ok = ok && pass;
      entries.push_back({{"ratio", ratio}, {"rate", rate}, {"expected", expect}, {"pass", pass}});
    }
    suites["sqrt_acceptance_rule"] = {{"trials", trials}, {"cases", entries}, {"pass", ok}};
    all_ok = all_ok && ok;
  }

  {  // serial-test uniformity with an iid stand-in chain
    manifold::ChainHandle<double> chain;
    chain.reversible = true;
    chain.step = [](const double&, manifold::Rng& rng) { return rng.uniform(); };
    const int reps = args.quick ? 400 : 2000;
    std::vector<std::int64_t> counts(20, 0);
    for (int rep = 0; rep < reps; ++rep) {
      manifold::Rng rng(args.seed + 3000 + static_cast<std::uint64_t>(rep));
      const double x0 = rng.uniform();
      const manifold::TestReport report = besag_serial_test(
          chain, x0, 5, 19, [](const double& x) { return x; }, rng);
      ++counts[static_cast<std::size_t>(report.rank - 1)];
    }
    const manifold::ChiSquareResult r =
        manifold::chi_square_from_counts(counts, std::vector<double>(20, 0.05));
    const bool ok = r.p_value > 0.01;
    suites["besag_iid_uniformity"] = {
        {"replications", reps}, {"chi_square", r.statistic}, {"p_value", r.p_value}, {"pass", ok}};
    all_ok = all_ok && ok;
  }

  {  // torus samplers under KS against the theta CDF
    manifold::TorusParams params{1.0, 0.9};
    manifold::Rng rng(args.seed + 4);
    auto cdf = [&](double t) { return theta_cdf(t, params); };
    std::vector<double> area_thetas, naive_thetas;
    for (const auto& s : sample_torus_area(1000, params, manifold::TorusEnvelope::Tight, rng))
      area_thetas.push_back(s.theta);
    for (const auto& s : sample_torus_naive(1000, params, rng)) naive_thetas.push_back(s.theta);
    const manifold::KsResult area_ks = manifold::ks_statistic(area_thetas, cdf);
    const manifold::KsResult naive_ks = manifold::ks_statistic(naive_thetas, cdf);
    const bool ok = area_ks.p_value > 0.01 && naive_ks.p_value < 1e-3;
    suites["torus_ks"] = {{"area_p", area_ks.p_value},
                          {"naive_p", naive_ks.p_value},
                          {"area_stat", area_ks.statistic},
                          {"naive_stat", naive_ks.statistic},
                          {"pass", ok}};
    all_ok = all_ok && ok;
  }

  const json config = {{"command", "validate"}, {"seed", args.seed}, {"quick", args.quick}};
  const json doc = {{"config", config}, {"suites", suites}, {"pass", all_ok}};
  write_atomically(args.out, doc.dump(2) + "\n");
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Samplers and conditional tests on embedded manifolds"};
  app.require_subcommand(1);

  TorusArgs torus_args;
  auto* torus = app.add_subcommand("torus", "Sample the curved torus (area or naive measure)");
  torus->add_option("--n", torus_args.n, "sample count")->required();
  torus->add_option("--R", torus_args.big_r, "major radius")->required();
  torus->add_option("--r", torus_args.small_r, "minor radius")->required();
  torus->add_option("--seed", torus_args.seed, "rng seed");
  torus->add_option("--method", torus_args.method, "area|naive")
      ->check(CLI::IsMember({"area", "naive"}));
  torus->add_option("--envelope", torus_args.envelope, "tight|loose")
      ->check(CLI::IsMember({"tight", "loose"}));
  torus->add_option("--format", torus_args.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  torus->add_option("--out", torus_args.out, "output path")->required();

  GammaArgs gamma_args;
  auto* gamma = app.add_subcommand("gamma", "Metropolis chain on the sum/product manifold");
  gamma->add_option("--n", gamma_args.n, "dimension (>= 3)")->required();
  gamma->add_option("--S", gamma_args.sum, "sum constraint")->required();
  gamma->add_option("--P", gamma_args.product, "product constraint")->required();
  gamma->add_option("--steps", gamma_args.cfg.steps, "chain steps")->required();
  gamma->add_option("--burnin", gamma_args.cfg.burnin, "burn-in steps");
  gamma->add_option("--thin", gamma_args.cfg.thin, "thinning stride");
  gamma->add_option("--eps", gamma_args.cfg.eps, "proposal half-width (0 = 0.05 S/n)");
  gamma->add_option("--seed", gamma_args.cfg.seed, "rng seed");
  gamma->add_option("--mode", gamma_args.mode, "area|conditional")
      ->check(CLI::IsMember({"area", "conditional"}));
  gamma->add_option("--format", gamma_args.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  gamma->add_option("--out", gamma_args.out, "output path")->required();
  gamma_args.cfg.eps = 0.0;

  NeymanArgs neyman_args;
  auto* neyman = app.add_subcommand("neyman", "Conditional smooth goodness-of-fit test");
  neyman->add_option("--data", neyman_args.data_path, "input file, one value per line")
      ->required();
  neyman->add_option("--B", neyman_args.b_replicates, "serial-test replicates");
  neyman->add_option("--T", neyman_args.t_steps, "chain steps per leg");
  neyman->add_option("--eps", neyman_args.eps, "curve-move half-width");
  neyman->add_option("--seed", neyman_args.seed, "rng seed");
  neyman->add_option("--statistic", neyman_args.statistic, "legendre5|custom")
      ->check(CLI::IsMember({"legendre5", "custom"}));
  neyman->add_option("--format", neyman_args.format, "json")
      ->check(CLI::IsMember({"csv", "json"}));
  neyman->add_option("--out", neyman_args.out, "output JSON path")->required();

  PitfallArgs pitfall_args;
  auto* pitfall = app.add_subcommand("pitfall", "Neighborhood-sampler bias demonstration");
  pitfall->add_option("--demo", pitfall_args.demo, "path3|random")
      ->check(CLI::IsMember({"path3", "random"}));
  pitfall->add_option("--n", pitfall_args.n, "state count for the random demo");
  pitfall->add_option("--seed", pitfall_args.seed, "rng seed");
  pitfall->add_option("--format", pitfall_args.format, "json")
      ->check(CLI::IsMember({"csv", "json"}));
  pitfall->add_option("--out", pitfall_args.out, "output JSON path")->required();

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Run the calibration suites");
  validate->add_option("--seed", validate_args.seed, "rng seed");
  validate->add_flag("--quick", validate_args.quick, "smaller trial counts");
  validate->add_option("--format", validate_args.format, "json")
      ->check(CLI::IsMember({"csv", "json"}));
  validate->add_option("--out", validate_args.out, "output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (torus->parsed()) return run_torus(torus_args);
    if (gamma->parsed()) return run_gamma(gamma_args);
    if (neyman->parsed()) return run_neyman(neyman_args);
    if (pitfall->parsed()) return run_pitfall(pitfall_args);
    if (validate->parsed()) return run_validate(validate_args);
  } catch (const manifold::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
