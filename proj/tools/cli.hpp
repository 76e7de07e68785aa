#pragma once

// Command-line front end: ingestion -> diagnostics -> CSV/JSON reports.
// Exit codes: 0 success, 1 input or validation error, 2 conflict flag
// raised under --strict.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bayes_lens/bayes_lens.hpp"

namespace bayes_lens::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

enum ExitCode : int { kOk = 0, kInputError = 1, kFlagged = 2 };

struct RunConfig {
  std::string subcommand;
  std::string loglik, meta, pred, groups, spec;
  std::string out = ".";
  std::uint64_t seed = kDefaultSeed;
  bool pv_group_factor = true;
  bool kl_symmetrize = false;
  bool mc_kl = false;
  int kl_replicates = 64;
  Index trunc_rank = 0;  // 0: all eigenvalues
  double threshold = 3.0;
  bool strict = false;
  // simulate
  Index n = 30, p = 3, draws = 4000, chains = 4;
  std::optional<Index> outlier_idx, leverage_idx;
  double outlier_scale = 8.0, leverage_shift = 5.0;
};

namespace detail {

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out) / name;
}

inline void write_file(const RunConfig& cfg, const std::string& name,
                       const std::function<void(std::ostream&)>& body) {
  const auto path = out_path(cfg, name);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  body(out);
}

inline void write_json(const RunConfig& cfg, const std::string& name, const nlohmann::json& j) {
  write_file(cfg, name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
}

inline void validate(const RunConfig& cfg) {
  if (!(cfg.threshold > 0)) throw Error(ErrorCode::InvalidArgument, "--threshold must be > 0");
  if (cfg.trunc_rank < 0) throw Error(ErrorCode::RankOutOfRange, "--trunc-rank must be >= 0");
  if (cfg.kl_replicates < 1) throw Error(ErrorCode::NoReplicates, "--kl-replicates must be >= 1");
  std::filesystem::create_directories(cfg.out);
}

inline void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

}  // namespace detail

inline int cmd_influence(const RunConfig& cfg, std::ostream& err) {
  detail::require(cfg.loglik, "--loglik");
  detail::require(cfg.meta, "--meta");
  if (cfg.subcommand == "conflict") detail::require(cfg.groups, "--groups");
  const auto samples = load_samples(cfg.loglik, cfg.meta);
  const auto report = influence_report(samples, {cfg.threshold});
  detail::write_file(cfg, "influence_report.csv", [&](auto& o) { write_influence_csv(o, report); });
  detail::write_file(cfg, "influence_totals.csv", [&](auto& o) { write_influence_totals_csv(o, report); });
  auto j = to_json(report);
  if (!cfg.groups.empty()) {
    const auto groups = load_groups(cfg.groups);
    const auto rows = cross_conflict(samples, groups, {cfg.pv_group_factor});
    detail::write_file(cfg, "cross_conflict.csv", [&](auto& o) { write_cross_conflict_csv(o, rows); });
    j["cross_conflict"] = to_json(rows);
    j["pv_group_factor"] = cfg.pv_group_factor;
  }
  detail::write_json(cfg, "influence_report.json", j);
  if (report.conflict_flag) {
    err << "warning: p_V/p_W = " << bayes_lens::detail::format_double(report.conflict_ratio)
        << " reaches the conflict threshold " << bayes_lens::detail::format_double(cfg.threshold) << '\n';
    if (cfg.strict) return kFlagged;
  }
  return kOk;
}

inline int cmd_leverage(const RunConfig& cfg, std::ostream& err) {
  detail::require(cfg.pred, "--pred");
  detail::require(cfg.meta, "--meta");
  const auto pred = load_predictive(cfg.pred, cfg.meta);
  HatOptions opts{cfg.seed, cfg.kl_symmetrize, cfg.mc_kl, cfg.kl_replicates};
  const auto hv = hat_values(pred, opts);
  detail::report_warnings(hv.warnings, err);
  detail::write_file(cfg, "hat_values.csv", [&](auto& o) { write_hat_values_csv(o, hv); });
  auto j = to_json(hv);
  if (!cfg.groups.empty()) {
    const auto grouped = aggregate(hv, load_groups(cfg.groups));
    detail::write_file(cfg, "hat_values_groups.csv", [&](auto& o) { write_hat_values_csv(o, grouped); });
    j["groups"] = to_json(grouped);
  }
  detail::write_json(cfg, "hat_values.json", j);
  return kOk;
}

inline int cmd_outliers(const RunConfig& cfg, std::ostream& err) {
  detail::require(cfg.loglik, "--loglik");
  detail::require(cfg.pred, "--pred");
  detail::require(cfg.meta, "--meta");
  auto samples = load_samples(cfg.loglik, cfg.meta);
  const auto pred = load_predictive(cfg.pred, cfg.meta);
  check_aligned(samples, pred);
  auto hv = hat_values(pred, {cfg.seed, cfg.kl_symmetrize, cfg.mc_kl, cfg.kl_replicates});
  detail::report_warnings(hv.warnings, err);
  if (!cfg.groups.empty()) {
    const auto groups = load_groups(cfg.groups);
    samples = aggregate(samples, groups);
    hv = aggregate(hv, groups);
  }
  const auto dec = outlier_matrix(loglik_covariance(samples), hv);
  const Index rank = cfg.trunc_rank == 0 ? dec.eigenvalues.size() : cfg.trunc_rank;
  const auto trunc = truncated_clout(dec, rank);
  detail::write_file(cfg, "clout.csv", [&](auto& o) { write_clout_csv(o, dec, trunc, rank); });
  detail::write_file(cfg, "scree.csv", [&](auto& o) { write_scree_csv(o, scree(dec)); });
  auto j = to_json(dec);
  j["trunc_rank"] = rank;
  j["trunc_clout"] = bayes_lens::detail::numbers(trunc);
  detail::write_json(cfg, "outlier_decomposition.json", j);
  return kOk;
}

inline int cmd_oracle(const RunConfig& cfg, std::ostream&) {
  detail::require(cfg.spec, "--spec");
  std::ifstream in(cfg.spec);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open spec '" + cfg.spec + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("spec is not valid JSON: ") + e.what());
  }
  const auto spec = spec_from_json(j);
  const auto d = fit(spec);
  auto out = to_json(d);
  out["obs_ids"] = default_obs_ids(spec.n());
  if (d.theta_hat) {
    const auto [lhs, rhs] = sandwich_identity_check(spec);
    out["sandwich_identity"] = {{"lhs", lhs}, {"rhs", rhs}};
  }
  detail::write_json(cfg, "linear_diagnostics.json", out);
  detail::write_file(cfg, "linear_diagnostics.csv",
                     [&](auto& o) { write_linear_diagnostics_csv(o, d, default_obs_ids(spec.n())); });
  return kOk;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream&) {
  LinearModelSpec spec;
  if (!cfg.spec.empty()) {
    std::ifstream in(cfg.spec);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open spec '" + cfg.spec + "'");
    nlohmann::json j;
    in >> j;
    spec = spec_from_json(j);
  } else {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 7u};
    std::mt19937_64 rng(seq);
    spec = random_spec(rng, cfg.n, cfg.p);
  }
  if (cfg.outlier_idx || cfg.leverage_idx) {
    if (!cfg.outlier_idx || !cfg.leverage_idx) {
      throw Error(ErrorCode::InvalidArgument, "--outlier-idx and --leverage-idx go together");
    }
    spec = plant_anomalies(spec, *cfg.outlier_idx, cfg.outlier_scale, *cfg.leverage_idx, cfg.leverage_shift);
  }
  const auto draws = exact_sampler(spec, cfg.draws, cfg.chains, cfg.seed);
  detail::write_json(cfg, "spec.json", spec_to_json(spec));
  detail::write_file(cfg, "loglik.csv", [&](auto& o) { write_samples_csv(o, draws.loglik); });
  detail::write_file(cfg, "pred.csv", [&](auto& o) { write_predictive_csv(o, draws.pred); });
  detail::write_json(cfg, "meta.json", metadata_json(draws.loglik.draw_chain(), draws.pred));
  return kOk;
}

inline void print_error(std::ostream& err, std::string_view code, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"code", code}, {"message", message}};
  err << j.dump() << '\n';
}

inline int dispatch(const RunConfig& cfg, std::ostream& err) {
  try {
    detail::validate(cfg);
    if (cfg.subcommand == "influence" || cfg.subcommand == "conflict") return cmd_influence(cfg, err);
    if (cfg.subcommand == "leverage") return cmd_leverage(cfg, err);
    if (cfg.subcommand == "outliers") return cmd_outliers(cfg, err);
    if (cfg.subcommand == "oracle") return cmd_oracle(cfg, err);
    if (cfg.subcommand == "simulate") return cmd_simulate(cfg, err);
    throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + cfg.subcommand + "'");
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.detail());
  } catch (const nlohmann::json::exception& e) {
    print_error(err, "InvalidArgument", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(err, "InvalidArgument", e.what());
  }
  return kInputError;
}

/// Parses argv into a RunConfig and runs the selected subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian leverage, influence, outlier and prior-data conflict diagnostics"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "Output directory (created if absent)");
    sub->add_option("--seed", cfg.seed, "Seed for every random stream");
  };
  auto draws_inputs = [&](CLI::App* sub, bool loglik, bool pred) {
    if (loglik) sub->add_option("--loglik", cfg.loglik, "Log-likelihood draws CSV");
    if (pred) sub->add_option("--pred", cfg.pred, "Predictive-parameter draws CSV");
    sub->add_option("--meta", cfg.meta, "Metadata JSON with chain labels");
    sub->add_option("--groups", cfg.groups, "Group map CSV (obs_id,group)");
  };
  auto leverage_flags = [&](CLI::App* sub) {
    sub->add_flag("--kl-symmetrize", cfg.kl_symmetrize, "Average KL over both directions");
    sub->add_flag("--mc-kl", cfg.mc_kl, "Estimate KL by replicate sampling");
    sub->add_option("--kl-replicates", cfg.kl_replicates, "Replicates per pair for --mc-kl");
  };

  for (const char* name : {"influence", "conflict"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "conflict"
                                             ? "Cross-conflict ratios per group (influence --groups)"
                                             : "LINF, DINF, CLINF and p_W, p_W*, p_V");
    common(sub);
    draws_inputs(sub, true, false);
    sub->add_option("--pv-group-factor", cfg.pv_group_factor, "Keep the factor 2 in per-group p_V (on/off)");
    sub->add_option("--threshold", cfg.threshold, "p_V/p_W conflict threshold");
    sub->add_flag("--strict", cfg.strict, "Exit 2 when the conflict flag fires");
  }
  auto* lev = app.add_subcommand("leverage", "Bayesian hat values and conformal leverage");
  common(lev);
  draws_inputs(lev, false, true);
  leverage_flags(lev);

  auto* outl = app.add_subcommand("outliers", "Outlier matrix, CLOUT and scree table");
  common(outl);
  draws_inputs(outl, true, true);
  leverage_flags(outl);
  outl->add_option("--trunc-rank", cfg.trunc_rank, "Eigenvalues kept in truncated CLOUT (0 = all)");

  auto* orc = app.add_subcommand("oracle", "Closed-form diagnostics for a conjugate linear model");
  common(orc);
  orc->add_option("--spec", cfg.spec, "Model spec JSON");

  auto* sim = app.add_subcommand("simulate", "Exact posterior draws for a conjugate linear model");
  common(sim);
  sim->add_option("--spec", cfg.spec, "Model spec JSON (default: random spec from --seed)");
  sim->add_option("--n", cfg.n, "Observations of the random spec");
  sim->add_option("--p", cfg.p, "Coefficients of the random spec");
  sim->add_option("--draws", cfg.draws, "Total posterior draws");
  sim->add_option("--chains", cfg.chains, "Number of chains");
  sim->add_option("--outlier-idx", cfg.outlier_idx, "Row given a planted response outlier (0-based)");
  sim->add_option("--outlier-scale", cfg.outlier_scale, "Outlier offset in residual sd");
  sim->add_option("--leverage-idx", cfg.leverage_idx, "Row given a planted leverage point (0-based)");
  sim->add_option("--leverage-shift", cfg.leverage_shift, "Leverage shift in predictor sd");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "InvalidArgument", e.what());
    return kInputError;
  }
  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  return dispatch(cfg, err);
}

}  // namespace bayes_lens::cli
