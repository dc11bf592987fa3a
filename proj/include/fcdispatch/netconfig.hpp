#pragma once

// JSON network documents and result serialization.
//
//   {"version": "1",
//    "branches": [{"stacks": [{"a": 47.655, "b": -1.297, "phi": 1}],
//                  "i_lb": 2.103, "i_ub": 106.8127}, ...]}
//
// "i_ub" may be the string "inf". Numbers are written in shortest round-trip
// form, so parse(serialize(x)) reproduces every double bit for bit.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcdispatch/dispatch.hpp"
#include "fcdispatch/observable_table.hpp"
#include "fcdispatch/stack_model.hpp"

namespace fcdispatch {

inline constexpr const char* kConfigVersion = "1";
inline constexpr const char* kInfeasibleMessage = "Required power cannot be obtained";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline double number_field(const nlohmann::json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "." + key + ": missing");
  if (!it->is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return it->get<double>();
}

inline double bound_field(const nlohmann::json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "." + key + ": missing");
  if (it->is_string()) {
    if (it->get<std::string>() == "inf") return kUnbounded;
    throw ConfigError(path + "." + key + ": only the string \"inf\" is accepted");
  }
  if (!it->is_number()) throw ConfigError(path + "." + key + ": expected a number or \"inf\"");
  return it->get<double>();
}

inline ojson bound_json(double v) { return std::isinf(v) && v > 0 ? ojson("inf") : ojson(v); }

}  // namespace detail

/// Parses and validates a network document. Structural problems raise
/// ConfigError with the JSON path; invariant violations raise ValidationError
/// naming the branch and stack.
inline Network parse_network(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON at " + detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0) +
                      ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("document: expected an object");
  auto ver = doc.find("version");
  if (ver == doc.end() || !ver->is_string()) throw ConfigError("version: expected a string");
  auto brs = doc.find("branches");
  if (brs == doc.end() || !brs->is_array()) throw ConfigError("branches: expected an array");
  if (brs->empty()) throw ConfigError("branches: must not be empty");

  Network net;
  for (std::size_t i = 0; i < brs->size(); ++i) {
    const auto& b = (*brs)[i];
    const std::string path = "branches[" + std::to_string(i) + "]";
    if (!b.is_object()) throw ConfigError(path + ": expected an object");
    auto st = b.find("stacks");
    if (st == b.end() || !st->is_array()) throw ConfigError(path + ".stacks: expected an array");
    BranchSpec br;
    for (std::size_t j = 0; j < st->size(); ++j) {
      const auto& s = (*st)[j];
      const std::string spath = path + ".stacks[" + std::to_string(j) + "]";
      if (!s.is_object()) throw ConfigError(spath + ": expected an object");
      br.stacks.push_back({detail::number_field(s, "a", spath), detail::number_field(s, "b", spath),
                           detail::number_field(s, "phi", spath)});
    }
    br.i_lb = detail::number_field(b, "i_lb", path);
    br.i_ub = detail::bound_field(b, "i_ub", path);
    net.branches.push_back(std::move(br));
  }
  validate(net);
  return net;
}

inline std::string serialize_network(const Network& net) {
  detail::ojson doc;
  doc["version"] = kConfigVersion;
  doc["branches"] = detail::ojson::array();
  for (const BranchSpec& br : net.branches) {
    detail::ojson b;
    b["stacks"] = detail::ojson::array();
    for (const SqrtStackParams& s : br.stacks) {
      b["stacks"].push_back({{"a", s.a}, {"b", s.b}, {"phi", s.phi}});
    }
    b["i_lb"] = br.i_lb;
    b["i_ub"] = detail::bound_json(br.i_ub);
    doc["branches"].push_back(std::move(b));
  }
  return doc.dump(2) + "\n";
}

namespace detail {

inline ojson index_list(const std::vector<std::size_t>& v) {
  ojson arr = ojson::array();
  for (std::size_t i : v) arr.push_back(i + 1);
  return arr;
}

}  // namespace detail

/// JSON record for one dispatch. Branch indices are 1-based.
inline std::string serialize_result(const DispatchResult& r) {
  detail::ojson doc;
  doc["status"] = to_string(r.status);
  doc["p_req"] = r.p_req;
  if (r.status == DispatchStatus::Optimal) {
    doc["currents"] = r.currents;
    doc["total_current"] = r.total_current;
    doc["total_power"] = r.total_power;
    doc["mu"] = r.mu;
    doc["lambda"] = r.mu > 0.0 ? detail::ojson(1.0 / r.mu) : detail::ojson("inf");
    doc["active_sets"] = {{"at_lb", detail::index_list(r.sets.at_lb)},
                          {"interior", detail::index_list(r.sets.interior)},
                          {"at_ub", detail::index_list(r.sets.at_ub)},
                          {"p_req_eff", r.sets.p_req_eff}};
  } else {
    doc["message"] = kInfeasibleMessage;
  }
  doc["feasible_range"] = {r.p_min, r.p_max};
  return doc.dump(2) + "\n";
}

/// Shortest decimal that parses back to the same double.
inline std::string format_exact(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_exact: conversion failed");
  return std::string(buf.data(), end);
}

inline std::string sweep_csv_header(std::size_t n_branches) {
  std::string h = "p_req";
  for (std::size_t j = 1; j <= n_branches; ++j) h += ",i_" + std::to_string(j);
  h += ",i_total,mu,status\n";
  return h;
}

/// One CSV row; infeasible rows leave the numeric columns empty.
inline std::string sweep_csv_row(const DispatchResult& r, std::size_t n_branches) {
  std::string row = format_exact(r.p_req);
  const bool ok = r.status == DispatchStatus::Optimal;
  for (std::size_t j = 0; j < n_branches; ++j) {
    row += ',';
    if (ok) row += format_exact(r.currents[j]);
  }
  row += ',';
  if (ok) row += format_exact(r.total_current);
  row += ',';
  if (ok) row += format_exact(r.mu);
  row += ',';
  row += to_string(r.status);
  row += '\n';
  return row;
}

inline std::string serialize_sweep(std::span<const DispatchResult> rows, std::size_t n_branches) {
  std::string out = sweep_csv_header(n_branches);
  for (const DispatchResult& r : rows) out += sweep_csv_row(r, n_branches);
  return out;
}

/// Evenly spaced demands from `from` to `to` inclusive; endpoints are exact.
inline std::vector<double> sweep_demands(double from, double to, std::size_t points) {
  if (points < 2) throw std::invalid_argument("sweep needs at least 2 points");
  if (!(from <= to)) throw std::invalid_argument("sweep range must satisfy from <= to");
  std::vector<double> out(points);
  const double step = (to - from) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) out[k] = from + step * static_cast<double>(k);
  out.back() = to;
  return out;
}

}  // namespace fcdispatch
