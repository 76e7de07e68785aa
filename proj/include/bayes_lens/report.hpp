#pragma once

// Tidy CSV and JSON emitters for every diagnostic report. CSV numbers carry
// 17 significant digits; JSON writes non-finite values as null.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <ostream>
#include <string>
#include <vector>

#include "bayes_lens/detail/numeric.hpp"
#include "bayes_lens/influence.hpp"
#include "bayes_lens/leverage.hpp"
#include "bayes_lens/linear_oracle.hpp"
#include "bayes_lens/outliers.hpp"

namespace bayes_lens {

namespace detail {

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.begin(), v.end()}; }

inline nlohmann::json number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json numbers(const Eigen::VectorXd& v) {
  auto arr = nlohmann::json::array();
  for (double x : v) arr.push_back(number(x));
  return arr;
}

/// Writes a header line then one row per observation.
inline void write_columns(std::ostream& out, const std::vector<std::string>& ids,
                          const std::vector<std::pair<std::string, const Eigen::VectorXd*>>& cols) {
  out << "obs_id";
  for (const auto& [name, v] : cols) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (const auto& [name, v] : cols) out << ',' << format_double((*v)(static_cast<Index>(i)));
    out << '\n';
  }
}

inline void write_key_values(std::ostream& out,
                             const std::vector<std::pair<std::string, double>>& rows) {
  out << "statistic,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << format_double(v) << '\n';
}

}  // namespace detail

inline std::vector<std::pair<std::string, double>> influence_totals(const InfluenceReport& r) {
  return {{"p_w", r.p_w},
          {"p_w_mcse", r.p_w_mcse},
          {"p_w_star", r.p_w_star},
          {"p_w_star_mcse", r.p_w_star_mcse},
          {"p_v", r.p_v},
          {"p_v_mcse", r.p_v_mcse},
          {"conflict_ratio", r.conflict_ratio},
          {"conflict_ratio_mcse", r.conflict_ratio_mcse},
          {"conflict_threshold", r.conflict_threshold},
          {"conflict_flag", r.conflict_flag ? 1.0 : 0.0},
          {"draws", static_cast<double>(r.draws)},
          {"replicates", static_cast<double>(r.replicates)}};
}

inline void write_influence_csv(std::ostream& out, const InfluenceReport& r) {
  detail::write_columns(out, r.obs_ids,
                        {{"linf", &r.linf},
                         {"linf_mcse", &r.linf_mcse},
                         {"dinf", &r.dinf},
                         {"dinf_mcse", &r.dinf_mcse},
                         {"clinf", &r.clinf},
                         {"clinf_mcse", &r.clinf_mcse}});
}

inline void write_influence_totals_csv(std::ostream& out, const InfluenceReport& r) {
  detail::write_key_values(out, influence_totals(r));
}

inline nlohmann::json to_json(const InfluenceReport& r) {
  nlohmann::json j;
  j["obs_ids"] = r.obs_ids;
  j["linf"] = detail::numbers(r.linf);
  j["linf_mcse"] = detail::numbers(r.linf_mcse);
  j["dinf"] = detail::numbers(r.dinf);
  j["dinf_mcse"] = detail::numbers(r.dinf_mcse);
  j["clinf"] = detail::numbers(r.clinf);
  j["clinf_mcse"] = detail::numbers(r.clinf_mcse);
  auto totals = nlohmann::json::object();
  for (const auto& [k, v] : influence_totals(r)) totals[k] = detail::number(v);
  totals["conflict_flag"] = r.conflict_flag;
  totals["draws"] = r.draws;
  totals["replicates"] = r.replicates;
  j["totals"] = totals;
  return j;
}

inline void write_cross_conflict_csv(std::ostream& out, const std::vector<GroupConflict>& rows) {
  out << "group,p_v,p_w,ratio,error\n";
  for (const auto& g : rows) {
    out << g.group << ',' << detail::format_double(g.p_v) << ',' << detail::format_double(g.p_w) << ','
        << (g.ratio ? detail::format_double(*g.ratio) : "") << ','
        << (g.error ? std::string(to_string(*g.error)) : "") << '\n';
  }
}

inline nlohmann::json to_json(const std::vector<GroupConflict>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& g : rows) {
    nlohmann::json j;
    j["group"] = g.group;
    j["p_v"] = detail::number(g.p_v);
    j["p_w"] = detail::number(g.p_w);
    j["ratio"] = g.ratio ? detail::number(*g.ratio) : nlohmann::json(nullptr);
    j["error"] = g.error ? nlohmann::json(std::string(to_string(*g.error))) : nlohmann::json(nullptr);
    arr.push_back(j);
  }
  return arr;
}

inline void write_hat_values_csv(std::ostream& out, const HatValues& hv) {
  const Eigen::VectorXd floored = hv.floored.cast<double>();
  detail::write_columns(out, hv.obs_ids,
                        {{"h", &hv.h}, {"h_mcse", &hv.mcse}, {"cllev", &hv.cllev}, {"floored", &floored}});
}

inline nlohmann::json to_json(const HatValues& hv) {
  nlohmann::json j;
  j["obs_ids"] = hv.obs_ids;
  j["h"] = detail::numbers(hv.h);
  j["h_mcse"] = detail::numbers(hv.mcse);
  j["cllev"] = detail::numbers(hv.cllev);
  j["floored"] = std::vector<int>(hv.floored.begin(), hv.floored.end());
  j["p_d_star"] = detail::number(hv.p_d_star);
  j["p_d_star_mcse"] = detail::number(hv.p_d_star_mcse);
  j["pairs"] = hv.pairs;
  j["warnings"] = hv.warnings;
  return j;
}

inline void write_clout_csv(std::ostream& out, const OutlierDecomposition& dec,
                            const Eigen::VectorXd& truncated, Index rank) {
  detail::write_columns(out, dec.obs_ids,
                        {{"clout", &dec.clout}, {"trunc_clout_" + std::to_string(rank), &truncated}});
}

inline void write_scree_csv(std::ostream& out, const std::vector<ScreeRow>& rows) {
  out << "rank,eigenvalue,cumulative_share\n";
  for (const auto& r : rows) {
    out << r.rank << ',' << detail::format_double(r.eigenvalue) << ','
        << detail::format_double(r.cumulative_share) << '\n';
  }
}

inline nlohmann::json to_json(const OutlierDecomposition& dec) {
  nlohmann::json j;
  j["obs_ids"] = dec.obs_ids;
  j["eigenvalues"] = detail::numbers(dec.eigenvalues);
  auto loadings = nlohmann::json::array();
  for (Index c = 0; c < dec.eigenvectors.cols(); ++c) {
    loadings.push_back(detail::numbers(dec.eigenvectors.col(c)));
  }
  j["loadings"] = loadings;
  j["clout"] = detail::numbers(dec.clout);
  return j;
}

inline nlohmann::json to_json(const LinearDiagnostics& d) {
  nlohmann::json j;
  j["h"] = detail::numbers(d.h);
  j["residuals"] = detail::numbers(d.residuals);
  j["theta_bar"] = detail::numbers(d.theta_bar);
  j["theta_hat"] = d.theta_hat ? detail::numbers(*d.theta_hat) : nlohmann::json(nullptr);
  j["linf"] = detail::numbers(d.linf);
  j["dinf"] = detail::numbers(d.dinf);
  j["zinf"] = detail::numbers(d.zinf);
  j["cook"] = detail::numbers(d.cook);
  j["p_d"] = detail::number(d.p_d);
  j["p_w"] = detail::number(d.p_w);
  j["p_v"] = detail::number(d.p_v);
  auto rows = nlohmann::json::array();
  for (Index i = 0; i < d.sandwich.rows(); ++i) rows.push_back(detail::numbers(d.sandwich.row(i).transpose()));
  j["sandwich"] = rows;
  return j;
}

inline void write_linear_diagnostics_csv(std::ostream& out, const LinearDiagnostics& d,
                                         const std::vector<std::string>& ids) {
  detail::write_columns(out, ids,
                        {{"h", &d.h},
                         {"residual", &d.residuals},
                         {"linf", &d.linf},
                         {"dinf", &d.dinf},
                         {"zinf", &d.zinf},
                         {"cook", &d.cook}});
}

}  // namespace bayes_lens
