// Brute-force reference implementations used as test oracles. They follow the
// defining formulas literally (sorted index vectors, ordered pairs, linear
// space) and share no code with the library beyond the conversion helpers.
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "nsc/choice_table.hpp"
#include "nsc/partition.hpp"

namespace oracle {

using Set = std::vector<int>;
using Table = std::map<Set, std::map<int, double>>;  // menu -> (alternative -> probability)

inline std::vector<Set> all_menus(int n) {
  std::vector<Set> out;
  for (int mask = 1; mask < (1 << n); ++mask) {
    Set s;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) s.push_back(i);
    out.push_back(s);
  }
  return out;
}

inline bool has(const Set& s, int x) {
  for (int y : s)
    if (y == x) return true;
  return false;
}

inline Set meet(const Set& a, const Set& b) {
  Set out;
  for (int x : a)
    if (has(b, x)) out.push_back(x);
  return out;
}

inline Set block_members(const std::vector<int>& label, int k) {
  Set s;
  for (int i = 0; i < static_cast<int>(label.size()); ++i)
    if (label[static_cast<std::size_t>(i)] == k) s.push_back(i);
  return s;
}

inline int block_count(const std::vector<int>& label) {
  int k = 0;
  for (int l : label) k = std::max(k, l + 1);
  return k;
}

inline double luce(const std::vector<double>& u, int a, const Set& A) {
  double s = 0;
  for (int x : A) s += u[static_cast<std::size_t>(x)];
  return u[static_cast<std::size_t>(a)] / s;
}

using NestValue = std::function<double(int block, const Set& subset)>;

// Two-stage Luce rule written out term by term.
inline double nsc(const std::vector<double>& u, const std::vector<int>& label, const NestValue& v, int a, const Set& A) {
  double total = 0, mine = 0, inside = 0;
  for (int k = 0; k < block_count(label); ++k) {
    Set part = meet(A, block_members(label, k));
    if (part.empty()) continue;
    total += v(k, part);
    if (label[static_cast<std::size_t>(a)] == k) {
      mine = v(k, part);
      for (int x : part) inside += u[static_cast<std::size_t>(x)];
    }
  }
  return mine / total * u[static_cast<std::size_t>(a)] / inside;
}

inline double nested_logit(const std::vector<double>& u, const std::vector<int>& label, const std::vector<double>& eta,
                           int a, const Set& A) {
  return nsc(
      u, label,
      [&](int k, const Set& s) {
        double t = 0;
        for (int x : s) t += u[static_cast<std::size_t>(x)];
        return std::pow(t, eta[static_cast<std::size_t>(k)]);
      },
      a, A);
}

// Generalized nested logit in linear space; alpha[k][x] dense (0 outside nest k).
inline double gnl(const std::vector<Set>& nests, const std::vector<std::vector<double>>& alpha,
                  const std::vector<double>& u, const std::vector<double>& lambda, int x, const Set& A) {
  double num = 0, den = 0;
  std::vector<double> inner(nests.size(), 0.0);
  for (std::size_t k = 0; k < nests.size(); ++k) {
    for (int y : meet(A, nests[k]))
      inner[k] += std::pow(alpha[k][static_cast<std::size_t>(y)] * u[static_cast<std::size_t>(y)], 1.0 / lambda[k]);
    if (inner[k] > 0) den += std::pow(inner[k], lambda[k]);
  }
  for (std::size_t k = 0; k < nests.size(); ++k) {
    if (!has(meet(A, nests[k]), x)) continue;
    const double own = std::pow(alpha[k][static_cast<std::size_t>(x)] * u[static_cast<std::size_t>(x)], 1.0 / lambda[k]);
    num += own / inner[k] * std::pow(inner[k], lambda[k]);
  }
  return num / den;
}

// Bell numbers from the Bell triangle.
inline long long bell(int n) {
  std::vector<long long> row{1};
  for (int i = 1; i <= n; ++i) {
    std::vector<long long> next{row.back()};
    for (long long x : row) next.push_back(next.back() + x);
    row = next;
  }
  return row.front();
}

inline Table from_table(const nsc::ChoiceTable& t) {
  Table out;
  for (nsc::Menu m : t.menus()) {
    Set s;
    for (std::size_t i : m) s.push_back(static_cast<int>(i));
    auto r = t.row(m);
    for (std::size_t k = 0; k < s.size(); ++k) out[s][s[k]] = r[k];
  }
  return out;
}

inline std::vector<int> labels_of(const nsc::NestStructure& s) {
  std::vector<int> l(s.universe_size());
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<int>(s.block_of(i));
  return l;
}

inline double share(const std::map<int, double>& row, const Set& part) {
  double s = 0;
  for (int x : part) s += row.at(x);
  return s;
}

// d(a, b): ordered menu pairs (A, B), both containing a and b, including A = B.
inline double distance(const Table& t, int a, int b) {
  double sum = 0, count = 0;
  for (const auto& [A, pa] : t)
    for (const auto& [B, pb] : t) {
      if (!has(A, a) || !has(A, b) || !has(B, a) || !has(B, b)) continue;
      const double x = std::log(pa.at(a) / pa.at(b)) - std::log(pb.at(a) / pb.at(b));
      sum += x * x;
      count += 1;
    }
  return count > 0 ? sum / count : 0.0;
}

struct Loss {
  double d1 = 0, d2 = 0;
};

// D1 over ordered (A, B, a, b) with a != b in one block; D2 over ordered
// distinct blocks (Y, Y') and ordered menus agreeing on both, both parts nonempty.
inline Loss loss(const Table& t, const std::vector<int>& label) {
  Loss out;
  double s1 = 0, n1 = 0, s2 = 0, n2 = 0;
  const int K = block_count(label);
  for (const auto& [A, pa] : t)
    for (const auto& [B, pb] : t) {
      for (int a : meet(A, B))
        for (int b : meet(A, B)) {
          if (a == b || label[static_cast<std::size_t>(a)] != label[static_cast<std::size_t>(b)]) continue;
          const double x = std::log(pa.at(a) / pa.at(b)) - std::log(pb.at(a) / pb.at(b));
          s1 += x * x;
          n1 += 1;
        }
      for (int y = 0; y < K; ++y)
        for (int z = 0; z < K; ++z) {
          if (y == z) continue;
          const Set Y = block_members(label, y), Z = block_members(label, z);
          const Set ay = meet(A, Y), az = meet(A, Z);
          if (ay.empty() || az.empty() || ay != meet(B, Y) || az != meet(B, Z)) continue;
          const double x = std::log(share(pa, ay) / share(pa, az)) - std::log(share(pb, ay) / share(pb, az));
          s2 += x * x;
          n2 += 1;
        }
    }
  out.d1 = n1 > 0 ? s1 / n1 : 0.0;
  out.d2 = n2 > 0 ? s2 / n2 : 0.0;
  return out;
}

// Regularity by definition: p(a, B) >= p(a, A) whenever a in B subset of A.
inline bool regular(const Table& t, double tol) {
  for (const auto& [A, pa] : t)
    for (const auto& [B, pb] : t) {
      if (B.size() >= A.size() || meet(A, B) != B) continue;
      for (int a : B)
        if (std::log(pb.at(a)) < std::log(pa.at(a)) - tol) return false;
    }
  return true;
}

}  // namespace oracle
