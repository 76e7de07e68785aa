#pragma once

// Posterior-draw data model: log-likelihood draws, predictive-family draws,
// observation groupings, and their text formats.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bayes_lens/detail/numeric.hpp"
#include "bayes_lens/errors.hpp"

namespace bayes_lens {

using Eigen::Index;

enum class Family { NormalKnownVar, Normal, Poisson, Binomial, Gamma };

constexpr std::string_view to_string(Family f) {
  switch (f) {
    case Family::NormalKnownVar: return "normal_known_var";
    case Family::Normal: return "normal";
    case Family::Poisson: return "poisson";
    case Family::Binomial: return "binomial";
    case Family::Gamma: return "gamma";
  }
  return "unknown";
}

inline Family parse_family(std::string_view tag) {
  for (Family f : {Family::NormalKnownVar, Family::Normal, Family::Poisson, Family::Binomial,
                   Family::Gamma}) {
    if (tag == to_string(f)) return f;
  }
  throw Error(ErrorCode::FamilyMismatch, "unknown family tag '" + std::string(tag) + "'");
}

/// Column suffixes of the predictive-draw CSV, in tuple order. The binomial
/// trial count is per observation and comes from metadata, not the CSV.
inline std::vector<std::string> param_names(Family f) {
  switch (f) {
    case Family::NormalKnownVar:
    case Family::Normal: return {"mean", "var"};
    case Family::Poisson: return {"rate"};
    case Family::Binomial: return {"prob"};
    case Family::Gamma: return {"shape", "rate"};
  }
  return {};
}

/// Family-specific parameter tuple; unused trailing slots are zero.
/// normal*: (mean, variance); poisson: (rate); binomial: (probability,
/// trials); gamma: (shape, rate).
using ParamTuple = std::array<double, 2>;

/// Throws InvalidParameter unless the tuple is inside the family's domain.
inline void validate_params(Family f, const ParamTuple& p) {
  auto bad = [&](const char* what) {
    throw Error(ErrorCode::InvalidParameter,
                std::string(to_string(f)) + ": " + what + " (got " +
                    detail::format_double(p[0]) + ", " + detail::format_double(p[1]) + ")");
  };
  if (!std::isfinite(p[0]) || !std::isfinite(p[1])) bad("non-finite parameter");
  switch (f) {
    case Family::NormalKnownVar:
    case Family::Normal:
      if (!(p[1] > 0)) bad("variance must be > 0");
      break;
    case Family::Poisson:
      if (!(p[0] > 0)) bad("rate must be > 0");
      break;
    case Family::Binomial:
      if (!(p[0] > 0 && p[0] < 1)) bad("probability must lie in (0,1)");
      if (!(p[1] >= 1) || p[1] != std::floor(p[1])) bad("trial count must be an integer >= 1");
      break;
    case Family::Gamma:
      if (!(p[0] > 0 && p[1] > 0)) bad("shape and rate must be > 0");
      break;
  }
}

namespace detail {

inline void check_chains(const std::vector<int>& draw_chain, Index draws) {
  if (static_cast<Index>(draw_chain.size()) != draws) {
    throw Error(ErrorCode::ChainMismatch, "chain labels cover " +
                                              std::to_string(draw_chain.size()) + " draws but " +
                                              std::to_string(draws) + " rows are present");
  }
  for (int c : draw_chain) {
    if (c < 0) throw Error(ErrorCode::ChainMismatch, "chain labels must be non-negative");
  }
}

inline void check_obs_ids(const std::vector<std::string>& ids, Index cols) {
  if (static_cast<Index>(ids.size()) != cols) {
    throw Error(ErrorCode::MalformedCsv, "observation id count does not match column count");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw Error(ErrorCode::MalformedCsv, "empty observation id");
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateObsId, "'" + id + "'");
  }
}

/// Rows of each chain, ordered by chain label.
inline std::vector<std::vector<Index>> rows_by_chain(const std::vector<int>& draw_chain) {
  std::map<int, std::vector<Index>> by_label;
  for (Index s = 0; s < static_cast<Index>(draw_chain.size()); ++s) {
    by_label[draw_chain[static_cast<std::size_t>(s)]].push_back(s);
  }
  std::vector<std::vector<Index>> out;
  out.reserve(by_label.size());
  for (auto& [label, rows] : by_label) out.push_back(std::move(rows));
  return out;
}

}  // namespace detail

/// S x n matrix of per-draw, per-observation log-likelihood contributions.
class LogLikSamples {
 public:
  LogLikSamples(Eigen::MatrixXd values, std::vector<int> draw_chain,
                std::vector<std::string> obs_ids)
      : values_(std::move(values)), draw_chain_(std::move(draw_chain)), obs_ids_(std::move(obs_ids)) {
    if (values_.rows() < 2) {
      throw Error(ErrorCode::DegenerateSample, "at least 2 draws are required");
    }
    if (values_.cols() < 1) throw Error(ErrorCode::MalformedCsv, "no observations");
    detail::check_obs_ids(obs_ids_, values_.cols());
    detail::check_chains(draw_chain_, values_.rows());
    for (Index j = 0; j < values_.cols(); ++j) {
      for (Index s = 0; s < values_.rows(); ++s) {
        if (!std::isfinite(values_(s, j))) {
          throw Error(ErrorCode::NonFiniteValue, "draw " + std::to_string(s + 1) +
                                                     ", observation '" + obs_ids_[j] + "'");
        }
      }
    }
  }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Index draws() const noexcept { return values_.rows(); }
  Index observations() const noexcept { return values_.cols(); }
  const std::vector<int>& draw_chain() const noexcept { return draw_chain_; }
  const std::vector<std::string>& obs_ids() const noexcept { return obs_ids_; }

  std::vector<std::vector<Index>> chain_rows() const { return detail::rows_by_chain(draw_chain_); }

  /// Replicate blocks for Monte Carlo error: one per chain, or the two
  /// halves of a single chain.
  std::vector<std::vector<Index>> replicate_rows() const {
    auto chains = chain_rows();
    if (chains.size() >= 2) return chains;
    const auto& all = chains.front();
    const auto half = all.size() / 2;
    return {std::vector<Index>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(half)),
            std::vector<Index>(all.begin() + static_cast<std::ptrdiff_t>(half), all.end())};
  }

 private:
  Eigen::MatrixXd values_;
  std::vector<int> draw_chain_;
  std::vector<std::string> obs_ids_;
};

/// Per-draw, per-observation parameters of the replicate predictive
/// distribution for a single family.
class PredictiveDraws {
 public:
  PredictiveDraws(Family family, std::vector<Eigen::MatrixXd> params, Eigen::VectorXd trials,
                  std::vector<int> draw_chain, std::vector<std::string> obs_ids)
      : family_(family),
        params_(std::move(params)),
        trials_(std::move(trials)),
        draw_chain_(std::move(draw_chain)),
        obs_ids_(std::move(obs_ids)) {
    const auto arity = param_names(family_).size();
    if (params_.size() != arity) {
      throw Error(ErrorCode::FamilyMismatch, std::string(to_string(family_)) + " needs " +
                                                 std::to_string(arity) + " parameter matrices");
    }
    const Index s = params_.front().rows();
    const Index n = params_.front().cols();
    for (const auto& m : params_) {
      if (m.rows() != s || m.cols() != n) {
        throw Error(ErrorCode::MalformedCsv, "parameter matrices differ in shape");
      }
    }
    if (s < 2) throw Error(ErrorCode::SingleDraw, "at least 2 predictive draws are required");
    detail::check_obs_ids(obs_ids_, n);
    detail::check_chains(draw_chain_, s);
    if (family_ == Family::Binomial) {
      if (trials_.size() != n) {
        throw Error(ErrorCode::InvalidParameter, "binomial draws need one trial count per observation");
      }
    } else {
      trials_ = Eigen::VectorXd::Ones(n);
    }
    for (Index i = 0; i < n; ++i) {
      for (Index d = 0; d < s; ++d) {
        try {
          validate_params(family_, tuple(d, i));
        } catch (const Error& e) {
          throw Error(e.code(), e.detail() + " at draw " + std::to_string(d + 1) +
                                    ", observation '" + obs_ids_[static_cast<std::size_t>(i)] + "'");
        }
      }
    }
  }

  Family family() const noexcept { return family_; }
  Index draws() const noexcept { return params_.front().rows(); }
  Index observations() const noexcept { return params_.front().cols(); }
  const std::vector<Eigen::MatrixXd>& params() const noexcept { return params_; }
  const Eigen::VectorXd& trials() const noexcept { return trials_; }
  const std::vector<int>& draw_chain() const noexcept { return draw_chain_; }
  const std::vector<std::string>& obs_ids() const noexcept { return obs_ids_; }
  std::vector<std::vector<Index>> chain_rows() const { return detail::rows_by_chain(draw_chain_); }

  ParamTuple tuple(Index draw, Index obs) const {
    ParamTuple p{params_[0](draw, obs), 0.0};
    if (params_.size() > 1) p[1] = params_[1](draw, obs);
    if (family_ == Family::Binomial) p[1] = trials_(obs);
    return p;
  }

 private:
  Family family_;
  std::vector<Eigen::MatrixXd> params_;
  Eigen::VectorXd trials_;
  std::vector<int> draw_chain_;
  std::vector<std::string> obs_ids_;
};

/// Throws unless both draw sets describe the same draws and observations.
inline void check_aligned(const LogLikSamples& ll, const PredictiveDraws& pred) {
  if (ll.draws() != pred.draws() || ll.draw_chain() != pred.draw_chain()) {
    throw Error(ErrorCode::ChainMismatch, "log-likelihood and predictive draws are not aligned");
  }
  if (ll.obs_ids() != pred.obs_ids()) {
    throw Error(ErrorCode::UnknownObsId,
                "log-likelihood and predictive draws name different observations");
  }
}

/// Assignment of observations to named groups. Groups are ordered by first
/// appearance in the assignment list.
class GroupMap {
 public:
  explicit GroupMap(std::vector<std::pair<std::string, std::string>> assignment)
      : assignment_(std::move(assignment)) {
    if (assignment_.empty()) throw Error(ErrorCode::InvalidArgument, "group map is empty");
    std::unordered_set<std::string> seen_groups;
    for (const auto& [obs, group] : assignment_) {
      if (!index_.emplace(obs, group).second) {
        throw Error(ErrorCode::DuplicateObsId, "'" + obs + "' assigned to more than one group");
      }
      if (seen_groups.insert(group).second) groups_.push_back(group);
    }
  }

  /// Each observation forms its own group.
  static GroupMap identity(const std::vector<std::string>& obs_ids) {
    std::vector<std::pair<std::string, std::string>> a;
    for (const auto& id : obs_ids) a.emplace_back(id, id);
    return GroupMap(std::move(a));
  }

  /// Every observation in one group.
  static GroupMap single(const std::vector<std::string>& obs_ids, const std::string& label = "all") {
    std::vector<std::pair<std::string, std::string>> a;
    for (const auto& id : obs_ids) a.emplace_back(id, label);
    return GroupMap(std::move(a));
  }

  const std::vector<std::string>& groups() const noexcept { return groups_; }
  const std::vector<std::pair<std::string, std::string>>& assignment() const noexcept {
    return assignment_;
  }

  /// Member column indices of each group, resolved against obs_ids.
  std::vector<std::vector<Index>> members(const std::vector<std::string>& obs_ids) const {
    std::unordered_map<std::string, Index> column;
    for (Index j = 0; j < static_cast<Index>(obs_ids.size()); ++j) column.emplace(obs_ids[j], j);
    for (const auto& [obs, group] : assignment_) {
      if (!column.count(obs)) {
        throw Error(ErrorCode::UnknownObsId, "group map names '" + obs + "' which has no draws");
      }
    }
    for (const auto& id : obs_ids) {
      if (!index_.count(id)) throw Error(ErrorCode::UncoveredObsId, "'" + id + "' has no group");
    }
    std::unordered_map<std::string, std::size_t> group_pos;
    for (std::size_t g = 0; g < groups_.size(); ++g) group_pos.emplace(groups_[g], g);
    std::vector<std::vector<Index>> out(groups_.size());
    for (Index j = 0; j < static_cast<Index>(obs_ids.size()); ++j) {
      out[group_pos.at(index_.at(obs_ids[j]))].push_back(j);
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> assignment_;
  std::unordered_map<std::string, std::string> index_;
  std::vector<std::string> groups_;
};

/// One column per group holding the row-wise sum of its members.
inline LogLikSamples aggregate(const LogLikSamples& samples, const GroupMap& groups) {
  const auto members = groups.members(samples.obs_ids());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(samples.draws(), static_cast<Index>(members.size()));
  for (std::size_t g = 0; g < members.size(); ++g) {
    for (Index j : members[g]) out.col(static_cast<Index>(g)) += samples.values().col(j);
  }
  return LogLikSamples(std::move(out), samples.draw_chain(), groups.groups());
}

/// Per-group sums of a per-observation vector (e.g. hat values).
inline Eigen::VectorXd aggregate(const Eigen::VectorXd& per_obs, const std::vector<std::string>& obs_ids,
                                 const GroupMap& groups) {
  const auto members = groups.members(obs_ids);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(members.size()));
  for (std::size_t g = 0; g < members.size(); ++g) {
    for (Index j : members[g]) out(static_cast<Index>(g)) += per_obs(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

struct Metadata {
  std::vector<int> chains;
  std::optional<std::vector<std::string>> families;
  std::optional<std::vector<double>> trials;
};

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
  /// First-column labels when read with `key_column`.
  std::vector<std::string> keys;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                         : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_cell(std::string_view cell, std::size_t row, const std::string& column,
                         bool allow_non_finite = false) {
  auto where = [&] { return "row " + std::to_string(row) + ", column '" + column + "'"; };
  if (cell.empty()) throw Error(ErrorCode::MalformedCsv, "empty cell at " + where());
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec == std::errc::result_out_of_range) {
    throw Error(ErrorCode::NonFiniteValue, "value '" + std::string(cell) + "' out of range at " + where());
  }
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::MalformedCsv, "non-numeric cell '" + std::string(cell) + "' at " + where());
  }
  if (!std::isfinite(v) && !allow_non_finite) {
    throw Error(ErrorCode::NonFiniteValue, "'" + std::string(cell) + "' at " + where());
  }
  return v;
}

}  // namespace detail

struct CsvOptions {
  /// Treat the first column as text labels (report files).
  bool key_column = false;
  /// Accept "inf" and "nan" cells (report files with divergence sentinels or
  /// unavailable standard errors).
  bool allow_non_finite = false;
};

/// Parses a numeric CSV with a header row. Rows are 1-based data rows in
/// error messages.
inline CsvTable read_csv(std::istream& in, const CsvOptions& options = {}) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split_fields(view);
    if (!have_header) {
      for (std::size_t j = options.key_column ? 1 : 0; j < fields.size(); ++j) table.header.emplace_back(fields[j]);
      have_header = true;
      continue;
    }
    ++row;
    const std::size_t offset = options.key_column ? 1 : 0;
    if (fields.size() != table.header.size() + offset) {
      throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(row) + " has " +
                                               std::to_string(fields.size()) + " cells, expected " +
                                               std::to_string(table.header.size() + offset));
    }
    if (options.key_column) table.keys.emplace_back(fields[0]);
    std::vector<double> values;
    values.reserve(fields.size());
    for (std::size_t j = offset; j < fields.size(); ++j) {
      values.push_back(detail::parse_cell(fields[j], row, table.header[j - offset], options.allow_non_finite));
    }
    rows.push_back(std::move(values));
  }
  if (!have_header) throw Error(ErrorCode::MalformedCsv, "missing header row");
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < rows[r].size(); ++j) {
      table.values(static_cast<Index>(r), static_cast<Index>(j)) = rows[r][j];
    }
  }
  return table;
}

inline CsvTable read_csv_file(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedCsv, "cannot open '" + path + "'");
  return read_csv(in, options);
}

inline Metadata parse_metadata(const nlohmann::json& j) {
  Metadata meta;
  if (!j.is_object() || !j.contains("chains") || !j["chains"].is_array()) {
    throw Error(ErrorCode::ChainMismatch, "metadata must contain a \"chains\" array");
  }
  for (const auto& c : j["chains"]) {
    if (!c.is_number_integer()) throw Error(ErrorCode::ChainMismatch, "chain labels must be integers");
    meta.chains.push_back(c.get<int>());
  }
  if (j.contains("families") && !j["families"].is_null()) {
    meta.families = j["families"].get<std::vector<std::string>>();
  }
  if (j.contains("trials") && !j["trials"].is_null()) {
    meta.trials = j["trials"].get<std::vector<double>>();
  }
  return meta;
}

inline Metadata load_metadata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ChainMismatch, "cannot open metadata '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ChainMismatch, "metadata '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_metadata(j);
}

inline LogLikSamples make_samples(CsvTable table, const Metadata& meta) {
  if (static_cast<Index>(meta.chains.size()) != table.values.rows()) {
    throw Error(ErrorCode::ChainMismatch, "metadata lists " + std::to_string(meta.chains.size()) +
                                              " chain labels for " +
                                              std::to_string(table.values.rows()) + " CSV rows");
  }
  return LogLikSamples(std::move(table.values), meta.chains, std::move(table.header));
}

inline LogLikSamples load_samples(const std::string& loglik_file, const std::string& metadata_file) {
  const auto meta = load_metadata(metadata_file);
  return make_samples(read_csv_file(loglik_file), meta);
}

/// Builds predictive draws from "<obs_id>.<param>" columns. The family comes
/// from metadata tags when present, otherwise from the column suffixes.
inline PredictiveDraws make_predictive(const CsvTable& table, const Metadata& meta) {
  std::vector<std::string> obs_order;
  std::map<std::string, std::map<std::string, Index>> columns;
  for (Index j = 0; j < static_cast<Index>(table.header.size()); ++j) {
    const auto& name = table.header[static_cast<std::size_t>(j)];
    const auto dot = name.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == name.size()) {
      throw Error(ErrorCode::MalformedCsv, "predictive column '" + name + "' is not <obs_id>.<param>");
    }
    const auto obs = name.substr(0, dot);
    const auto param = name.substr(dot + 1);
    if (!columns.count(obs)) obs_order.push_back(obs);
    if (!columns[obs].emplace(param, j).second) {
      throw Error(ErrorCode::DuplicateObsId, "column '" + name + "' appears twice");
    }
  }

  std::optional<Family> family;
  if (meta.families) {
    for (const auto& tag : *meta.families) {
      const Family f = parse_family(tag);
      if (family && *family != f) {
        throw Error(ErrorCode::FamilyMismatch, "mixed predictive families are not supported");
      }
      family = f;
    }
    if (meta.families->size() != obs_order.size()) {
      throw Error(ErrorCode::FamilyMismatch, "family tags do not match the observation count");
    }
  }
  if (!family) {
    std::set<std::string> suffixes;
    for (const auto& [param, col] : columns.at(obs_order.front())) suffixes.insert(param);
    if (suffixes == std::set<std::string>{"mean", "var"}) family = Family::Normal;
    else if (suffixes == std::set<std::string>{"rate"}) family = Family::Poisson;
    else if (suffixes == std::set<std::string>{"prob"}) family = Family::Binomial;
    else if (suffixes == std::set<std::string>{"shape", "rate"}) family = Family::Gamma;
    else throw Error(ErrorCode::FamilyMismatch, "cannot infer family from predictive columns");
  }

  const auto names = param_names(*family);
  const Index s = table.values.rows();
  const Index n = static_cast<Index>(obs_order.size());
  std::vector<Eigen::MatrixXd> params(names.size(), Eigen::MatrixXd(s, n));
  for (Index i = 0; i < n; ++i) {
    const auto& cols = columns.at(obs_order[static_cast<std::size_t>(i)]);
    if (cols.size() != names.size()) {
      throw Error(ErrorCode::FamilyMismatch,
                  "observation '" + obs_order[static_cast<std::size_t>(i)] + "' has the wrong parameter set");
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto it = cols.find(names[k]);
      if (it == cols.end()) {
        throw Error(ErrorCode::FamilyMismatch, "missing column '" + obs_order[static_cast<std::size_t>(i)] +
                                                   "." + names[k] + "'");
      }
      params[k].col(i) = table.values.col(it->second);
    }
  }

  Eigen::VectorXd trials;
  if (*family == Family::Binomial) {
    if (!meta.trials || static_cast<Index>(meta.trials->size()) != n) {
      throw Error(ErrorCode::InvalidParameter, "binomial draws need \"trials\" for every observation");
    }
    trials = Eigen::Map<const Eigen::VectorXd>(meta.trials->data(), n);
  }
  if (static_cast<Index>(meta.chains.size()) != s) {
    throw Error(ErrorCode::ChainMismatch, "metadata lists " + std::to_string(meta.chains.size()) +
                                              " chain labels for " + std::to_string(s) +
                                              " predictive rows");
  }
  return PredictiveDraws(*family, std::move(params), std::move(trials), meta.chains,
                         std::move(obs_order));
}

inline PredictiveDraws load_predictive(const std::string& pred_file, const std::string& metadata_file) {
  const auto meta = load_metadata(metadata_file);
  return make_predictive(read_csv_file(pred_file), meta);
}

/// Two-column CSV "obs_id,group" with a header row.
inline GroupMap read_groups(std::istream& in) {
  std::string line;
  bool header = false;
  std::vector<std::pair<std::string, std::string>> a;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split_fields(view);
    if (!header) {
      header = true;
      continue;
    }
    ++row;
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorCode::MalformedCsv, "group map row " + std::to_string(row) +
                                               " must be obs_id,group");
    }
    a.emplace_back(std::string(fields[0]), std::string(fields[1]));
  }
  return GroupMap(std::move(a));
}

inline GroupMap load_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open group map '" + path + "'");
  return read_groups(in);
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const Eigen::MatrixXd& values) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index s = 0; s < values.rows(); ++s) {
    for (Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << detail::format_double(values(s, j));
    }
    out << '\n';
  }
}

inline void write_samples_csv(std::ostream& out, const LogLikSamples& samples) {
  write_csv(out, samples.obs_ids(), samples.values());
}

inline void write_predictive_csv(std::ostream& out, const PredictiveDraws& pred) {
  const auto names = param_names(pred.family());
  const Index n = pred.observations();
  std::vector<std::string> header;
  Eigen::MatrixXd values(pred.draws(), n * static_cast<Index>(names.size()));
  Index col = 0;
  for (Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      header.push_back(pred.obs_ids()[static_cast<std::size_t>(i)] + "." + names[k]);
      values.col(col++) = pred.params()[k].col(i);
    }
  }
  write_csv(out, header, values);
}

inline nlohmann::json metadata_json(const std::vector<int>& chains,
                                    const std::optional<PredictiveDraws>& pred = std::nullopt) {
  nlohmann::json j;
  j["chains"] = chains;
  if (pred) {
    j["families"] = std::vector<std::string>(static_cast<std::size_t>(pred->observations()),
                                             std::string(to_string(pred->family())));
    if (pred->family() == Family::Binomial) {
      j["trials"] = std::vector<double>(pred->trials().begin(), pred->trials().end());
    }
  }
  return j;
}

}  // namespace bayes_lens
