// JSON and CSV formats for tables, models, datasets and reports.
#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsc/axioms.hpp"
#include "nsc/cnl.hpp"
#include "nsc/dataset.hpp"
#include "nsc/identification.hpp"
#include "nsc/models.hpp"
#include "nsc/similarity.hpp"
#include "nsc/simulate.hpp"

namespace nsc::io {

using json = nlohmann::json;

inline std::string format_double(double x) {
  if (std::isnan(x) || std::isinf(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Shortest round-trip form, for user-supplied inputs echoed back.
inline std::string shortest(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

// Serializer that writes every float with 17 significant digits.
inline void write_json(std::ostream& os, const json& j, int indent = 2, int depth = 0) {
  const std::string pad = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  switch (j.type()) {
    case json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      bool first = true;
      for (const auto& e : j) {
        os << (first ? "" : ",") << pad;
        write_json(os, e, indent, depth + 1);
        first = false;
      }
      os << close << ']';
      return;
    }
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        os << (first ? "" : ",") << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
        write_json(os, it.value(), indent, depth + 1);
        first = false;
      }
      os << close << '}';
      return;
    }
    default:
      os << j.dump();
  }
}

inline std::string dump(const json& j, int indent = 2) {
  std::ostringstream os;
  write_json(os, j, indent);
  os << '\n';
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("file-io", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("file-io", "cannot write " + path);
  out << text;
}

inline json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error("invalid-json", e.what());
  }
}

inline json error_json(const Error& e) {
  json j{{"error", e.code()}, {"message", e.what()}};
  if (!e.detail().empty()) {
    try {
      j["detail"] = json::parse(e.detail());
    } catch (const json::exception&) {
      j["detail"] = e.detail();
    }
  }
  return j;
}

inline json partition_json(const Universe& U, const NestStructure& s) {
  json out = json::array();
  for (Menu b : s.blocks()) out.push_back(U.names(b));
  return out;
}

inline NestStructure partition_from_json(const Universe& U, const json& j) {
  std::vector<Menu> blocks;
  for (const auto& b : j) blocks.push_back(U.menu(b.get<std::vector<std::string>>()));
  return NestStructure(U.size(), blocks);
}

// ---- choice tables ----

inline json table_json(const ChoiceTable& t) {
  json menus = json::array();
  for (Menu m : t.menus()) {
    auto r = t.row(m);
    menus.push_back({{"members", t.universe().names(m)}, {"probs", std::vector<double>(r.begin(), r.end())}});
  }
  return {{"universe", t.universe().ids()}, {"menus", menus}};
}

inline ChoiceTable table_from_json(const json& j) {
  try {
    ChoiceTable t(Universe(j.at("universe").get<std::vector<std::string>>()));
    for (const auto& e : j.at("menus")) {
      const auto ids = e.at("members").get<std::vector<std::string>>();
      const auto probs = e.at("probs").get<std::vector<double>>();
      if (ids.size() != probs.size()) throw Error("invalid-row", "members and probs differ in length");
      const Menu m = t.universe().menu(ids);
      if (m.size() != ids.size()) throw Error("invalid-menu", "menu lists an alternative twice");
      // Reorder to universe order.
      std::vector<double> row(ids.size());
      for (std::size_t k = 0; k < ids.size(); ++k)
        row[static_cast<std::size_t>(detail::position_in(t.universe().index_of(ids[k]), m))] = probs[k];
      t.set(m, std::move(row));
    }
    return t;
  } catch (const json::exception& e) {
    throw Error("invalid-json", e.what());
  }
}

// ---- models ----

inline std::string subset_key(const Universe& U, Menu s) {
  std::string k;
  for (std::size_t i : s) k += (k.empty() ? "" : "|") + U.id(i);
  return k;
}

inline json block_values_json(const Universe& U, const BlockValues& v) {
  json out = json::object();
  for (std::size_t k = 0; k < v.size(); ++k) {
    json b = json::object();
    for_each_subset(v.block(k), [&](Menu s) { b[subset_key(U, s)] = v(k, s); });
    out[std::to_string(k)] = b;
  }
  return out;
}

inline void block_values_from_json(const Universe& U, const json& j, BlockValues& v) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto& b = j.at(std::to_string(k));
    std::size_t seen = 0;
    for (auto it = b.begin(); it != b.end(); ++it) {
      std::vector<std::string> ids;
      std::stringstream ss(it.key());
      for (std::string id; std::getline(ss, id, '|');) ids.push_back(id);
      v.set(k, U.menu(ids), it.value().get<double>());
      ++seen;
    }
    if (seen != (std::size_t{1} << v.block(k).size()) - 1)
      throw Error("missing-v-entry", "block " + std::to_string(k) + " needs a value for every nonempty subset");
  }
}

inline json utilities_json(const Universe& U, const std::vector<double>& u) {
  json out = json::object();
  for (std::size_t i = 0; i < U.size(); ++i) out[U.id(i)] = u[i];
  return out;
}

inline std::vector<double> utilities_from_json(const Universe& U, const json& j) {
  std::vector<double> u(U.size(), 0.0);
  for (std::size_t i = 0; i < U.size(); ++i) u[i] = j.at(U.id(i)).get<double>();
  return u;
}

inline json model_json(const NscModel& m) {
  return {{"universe", m.universe.ids()},
          {"blocks", partition_json(m.universe, m.structure)},
          {"u", utilities_json(m.universe, m.u)},
          {"v", block_values_json(m.universe, m.v)}};
}

inline json model_json(const NestedLogitModel& m) {
  json j = model_json(m.to_nsc());
  j["eta"] = m.eta;
  return j;
}

inline json model_json(const ThreeStepModel& m) {
  return {{"universe", m.universe.ids()},
          {"outer", partition_json(m.universe, m.outer)},
          {"blocks", partition_json(m.universe, m.inner)},
          {"u", utilities_json(m.universe, m.u)},
          {"v", block_values_json(m.universe, m.v)},
          {"w", block_values_json(m.universe, m.w)}};
}

struct LoadedModel {
  std::optional<NscModel> nsc;
  std::optional<NestedLogitModel> nested_logit;
};

// Reads an NSC model, or a nested logit when "eta" is present (then v is optional).
inline LoadedModel model_from_json(const json& j) {
  try {
    Universe U(j.at("universe").get<std::vector<std::string>>());
    const NestStructure s = partition_from_json(U, j.at("blocks"));
    const auto u = utilities_from_json(U, j.at("u"));
    LoadedModel out;
    if (j.contains("eta")) {
      NestedLogitModel m{U, s, u, j.at("eta").get<std::vector<double>>()};
      m.validate();
      out.nested_logit = m;
      out.nsc = m.to_nsc();
      return out;
    }
    NscModel m{U, s, u, BlockValues(s)};
    block_values_from_json(U, j.at("v"), m.v);
    m.validate();
    out.nsc = std::move(m);
    return out;
  } catch (const json::exception& e) {
    throw Error("invalid-json", e.what());
  }
}

inline json cnl_json(const CnlModel& m) {
  json nests = json::array(), alpha = json::array(), log_alpha = json::array();
  for (std::size_t k = 0; k < m.nests.size(); ++k) {
    nests.push_back(m.universe.names(m.nests[k]));
    std::size_t pos = 0;
    for (std::size_t x : m.nests[k]) {
      const double la = m.log_alpha[k][pos++];
      alpha.push_back({k, m.universe.id(x), std::exp(la)});
      log_alpha.push_back({k, m.universe.id(x), la});
    }
  }
  json log_u = json::object();
  for (std::size_t i = 0; i < m.universe.size(); ++i) log_u[m.universe.id(i)] = m.log_u[i];
  return {{"universe", m.universe.ids()}, {"nests", nests},       {"alpha", alpha},
          {"log_alpha", log_alpha},       {"u", utilities_json(m.universe, m.u())},
          {"log_u", log_u},               {"lambda", m.lambda},   {"residual", m.residual}};
}

inline json cnl_diagnostics_json(const CnlDiagnostics& d) {
  return {{"iterations", d.iterations},
          {"converged", d.converged},
          {"used_fallback", d.used_fallback},
          {"invariant_violations", d.invariant_violations},
          {"first_violation", d.first_violation},
          {"p_star", d.p_star},
          {"lambda_star", d.lambda_star},
          {"lambda", d.lambda},
          {"max_reproduction_error", d.max_reproduction_error},
          {"residual_trace", d.residual_trace}};
}

// ---- reports ----

inline json witness_json(const Universe& U, const Witness& w) {
  json menus = json::array(), alts = json::array();
  for (Menu m : w.menus) menus.push_back(U.names(m));
  for (std::size_t a : w.alternatives) alts.push_back(U.id(a));
  return {{"menus", menus}, {"alternatives", alts}, {"lhs", w.lhs}, {"rhs", w.rhs}};
}

inline json axiom_report_json(const Universe& U, const AxiomReport& r) {
  json ws = json::array();
  for (const auto& w : r.witnesses) ws.push_back(witness_json(U, w));
  return {{"axiom", r.axiom},     {"passed", r.passed},   {"witnesses", ws},     {"tolerance", r.tolerance},
          {"flags", r.flags},     {"checked", r.checked}, {"skipped", r.skipped}};
}

inline json identification_json(const Universe& U, const IdentificationResult& r) {
  json out = json::array();
  for (const auto& s : r.ranked)
    out.push_back({{"partition", partition_json(U, s.partition)},
                   {"d1", s.loss.d1},
                   {"d2", s.loss.d2},
                   {"total", s.loss.total},
                   {"flags", s.loss.flags}});
  return out;
}

inline json similarity_json(const SimilarityRelation& s) {
  json out = json::object();
  const Universe& U = s.universe();
  for (std::size_t a = 0; a < U.size(); ++a) out[U.id(a)] = U.names(s.neighbors(a).without(a));
  return out;
}

// ---- CSV ----

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t");
  const auto b = s.find_last_not_of(" \t");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace detail

// "menu_id,alternative,count". The universe is every alternative in order of
// first appearance unless one is supplied.
inline Dataset dataset_from_csv(const std::string& text, std::optional<Universe> universe = std::nullopt) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("invalid-csv", "empty dataset file");
  auto header = detail::split_csv(line);
  for (auto& h : header) h = detail::trim(h);
  if (header != std::vector<std::string>{"menu_id", "alternative", "count"})
    throw Error("invalid-csv", "header must be menu_id,alternative,count");
  struct Row {
    std::string menu, alt;
    double count;
  };
  std::vector<Row> rows;
  std::vector<std::string> order, ids;
  std::map<std::string, bool> seen;
  for (std::size_t ln = 2; std::getline(in, line); ++ln) {
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != 3) throw Error("invalid-csv", "line " + std::to_string(ln) + " needs three fields");
    Row r{detail::trim(f[0]), detail::trim(f[1]), 0.0};
    try {
      std::size_t used = 0;
      r.count = std::stod(detail::trim(f[2]), &used);
      if (used != detail::trim(f[2]).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("invalid-count", "line " + std::to_string(ln) + " has a non-numeric count");
    }
    if (!seen.count(r.alt)) {
      seen[r.alt] = true;
      ids.push_back(r.alt);
    }
    if (std::find(order.begin(), order.end(), r.menu) == order.end()) order.push_back(r.menu);
    rows.push_back(std::move(r));
  }
  Universe U = universe ? *universe : Universe(ids);
  Dataset d(U);
  for (const auto& id : order) {
    std::map<std::size_t, double> counts;
    for (const auto& r : rows)
      if (r.menu == id) {
        const std::size_t a = U.index_of(r.alt);
        if (counts.count(a)) throw Error("invalid-csv", "menu " + id + " lists " + r.alt + " twice");
        counts[a] = r.count;
      }
    Menu m;
    std::vector<double> c;
    for (auto [a, v] : counts) {
      m = m.with(a);
      c.push_back(v);
    }
    d.add(id, m, std::move(c));
  }
  return d;
}

inline std::string dataset_csv(const Dataset& d) {
  std::string out = "menu_id,alternative,count\n";
  for (const auto& e : d.menus()) {
    std::size_t k = 0;
    for (std::size_t a : e.menu) out += e.id + "," + d.universe().id(a) + "," + format_double(e.counts[k++]) + "\n";
  }
  return out;
}

inline std::string distance_csv(const DistanceMatrix& d) {
  std::string out = "a,b,d,count\n";
  const Universe& U = d.universe;
  for (std::size_t a = 0; a < U.size(); ++a)
    for (std::size_t b = a + 1; b < U.size(); ++b)
      out += U.id(a) + "," + U.id(b) + "," + format_double(d.d[a][b]) + "," + format_double(d.pair_counts[a][b]) + "\n";
  return out;
}

inline std::string rates_csv(const std::vector<RateRow>& rows) {
  std::string out = "delta,trials,correct,rate,ci_low,ci_high\n";
  for (const auto& r : rows)
    out += shortest(r.delta) + "," + std::to_string(r.trials) + "," + std::to_string(r.correct) + "," +
           format_double(r.rate) + "," + format_double(r.ci.low) + "," + format_double(r.ci.high) + "\n";
  return out;
}

}  // namespace nsc::io
