#include "hm/curve.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hm {

__int128 WeierstrassModel::b2() const { return static_cast<__int128>(a1) * a1 + 4 * static_cast<__int128>(a2); }
__int128 WeierstrassModel::b4() const { return 2 * static_cast<__int128>(a4) + static_cast<__int128>(a1) * a3; }
__int128 WeierstrassModel::b6() const { return static_cast<__int128>(a3) * a3 + 4 * static_cast<__int128>(a6); }
__int128 WeierstrassModel::b8() const {
  const __int128 A1 = a1, A2 = a2, A3 = a3, A4 = a4, A6 = a6;
  return A1 * A1 * A6 + 4 * A2 * A6 - A1 * A3 * A4 + A2 * A3 * A3 - A4 * A4;
}
__int128 WeierstrassModel::c4() const { return b2() * b2() - 24 * b4(); }
__int128 WeierstrassModel::c6() const { return -b2() * b2() * b2() + 36 * b2() * b4() - 216 * b6(); }
__int128 WeierstrassModel::discriminant() const {
  const __int128 B2 = b2(), B4 = b4(), B6 = b6(), B8 = b8();
  return -B2 * B2 * B8 - 8 * B4 * B4 * B4 - 27 * B6 * B6 + 9 * B2 * B4 * B6;
}

WeierstrassModel WeierstrassModel::rescaled(std::int64_t u) const {
  WeierstrassModel m = *this;
  const std::int64_t u2 = u * u;
  m.a4 = a4 * u2 * u2;
  m.a6 = a6 * u2 * u2 * u2;
  return m;
}

void CurveData::validate() const {
  if (model.discriminant() == 0) throw std::invalid_argument("curve " + label + ": singular model");
  if (conductor == 0) throw std::invalid_argument("curve " + label + ": conductor must be positive");
  if (!is_squarefree_trial(conductor))
    throw std::invalid_argument("curve " + label + ": conductor " + std::to_string(conductor) +
                                " is not squarefree");
  if (modular_degree && *modular_degree == 0)
    throw std::invalid_argument("curve " + label + ": modular degree must be positive");
}

std::vector<std::uint32_t> CurveData::bad_primes() const {
  std::vector<std::uint32_t> out;
  std::uint64_t n = conductor;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(static_cast<std::uint32_t>(p));
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(static_cast<std::uint32_t>(n));
  return out;
}

CurveData parse_curve_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  CurveData c;
  c.label = j.value("label", std::string("unnamed"));
  const auto& a = j.at("a_invariants");
  if (!a.is_array() || a.size() != 5) throw std::invalid_argument("a_invariants must hold 5 integers");
  c.model = {a[0].get<std::int64_t>(), a[1].get<std::int64_t>(), a[2].get<std::int64_t>(),
             a[3].get<std::int64_t>(), a[4].get<std::int64_t>()};
  c.conductor = j.at("conductor").get<std::uint64_t>();
  if (j.contains("modular_degree") && !j["modular_degree"].is_null())
    c.modular_degree = j["modular_degree"].get<std::uint64_t>();
  c.validate();
  return c;
}

CurveData load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open curve file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_curve_json(ss.str());
}

std::string curve_to_json(const CurveData& curve) {
  nlohmann::ordered_json j;
  j["label"] = curve.label;
  const auto& m = curve.model;
  j["a_invariants"] = {m.a1, m.a2, m.a3, m.a4, m.a6};
  j["conductor"] = curve.conductor;
  if (curve.modular_degree) j["modular_degree"] = *curve.modular_degree;
  return j.dump();
}

namespace {

// Gamma_0(N)-optimal curves; X_0(N) has genus one for N = 11, 14, 15, 17, 19.
const std::map<std::string, CurveData>& builtin_table() {
  static const std::map<std::string, CurveData> table = {
      {"11a1", {"11a1", {0, -1, 1, -10, -20}, 11, 1}},
      {"14a1", {"14a1", {1, 0, 1, 4, -6}, 14, 1}},
      {"15a1", {"15a1", {1, 1, 1, -10, -10}, 15, 1}},
      {"17a1", {"17a1", {1, -1, 1, -1, -14}, 17, 1}},
      {"19a1", {"19a1", {0, 1, 1, -9, -15}, 19, 1}},
      {"37a1", {"37a1", {0, 0, 1, -1, 0}, 37, 2}},
  };
  return table;
}

}  // namespace

CurveData builtin_curve(const std::string& label) {
  const auto& t = builtin_table();
  auto it = t.find(label);
  if (it == t.end()) throw std::invalid_argument("unknown built-in curve " + label);
  return it->second;
}

std::vector<std::string> builtin_curve_labels() {
  std::vector<std::string> out;
  for (const auto& [k, v] : builtin_table()) out.push_back(k);
  return out;
}

namespace {

std::int64_t reduce(__int128 v, std::int64_t p) {
  auto r = static_cast<std::int64_t>(v % p);
  return r < 0 ? r + p : r;
}

}  // namespace

std::int64_t count_points_naive(const WeierstrassModel& m, std::uint32_t p) {
  if (p < 2) throw std::invalid_argument("count_points_naive: p must be prime");
  const std::int64_t P = p;
  if (p == 2) {
    std::int64_t count = 1;  // point at infinity
    for (std::int64_t x = 0; x < 2; ++x)
      for (std::int64_t y = 0; y < 2; ++y) {
        const __int128 lhs = y * y + m.a1 * x * y + m.a3 * y;
        const __int128 rhs = x * x * x + m.a2 * x * x + m.a4 * x + m.a6;
        if (reduce(lhs - rhs, 2) == 0) ++count;
      }
    return count;
  }
  // Odd p: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6.
  std::vector<std::int8_t> chi(p, -1);
  chi[0] = 0;
  for (std::int64_t y = 1; y < P; ++y) chi[(y * y) % P] = 1;
  const std::int64_t b2 = reduce(m.b2(), P), b4 = reduce(m.b4(), P), b6 = reduce(m.b6(), P);
  std::int64_t count = 1;
  for (std::int64_t x = 0; x < P; ++x) {
    const std::int64_t g = ((((4 * x + b2) % P) * x + 2 * b4) % P * x + b6) % P;
    count += 1 + chi[g];
  }
  return count;
}

std::int64_t trace_naive(const WeierstrassModel& m, std::uint32_t p) {
  return static_cast<std::int64_t>(p) + 1 - count_points_naive(m, p);
}

std::int64_t a_p(const CurveData& curve, std::uint32_t p) {
  const bool divides_disc = curve.model.discriminant() % p == 0;
  if (curve.conductor % p == 0) {
    if (!divides_disc)
      throw std::domain_error("curve " + curve.label + ": p=" + std::to_string(p) +
                              " divides the conductor but not the discriminant");
    const std::int64_t t = trace_naive(curve.model, p);
    if (t != 1 && t != -1)
      throw std::domain_error("curve " + curve.label + ": reduction at p=" + std::to_string(p) +
                              " is not multiplicative");
    return t;
  }
  if (divides_disc)
    throw std::domain_error("curve " + curve.label + ": p=" + std::to_string(p) +
                            " divides the discriminant but not the conductor (inconsistent model)");
  if (p < 500) return trace_naive(curve.model, p);
  return trace_bsgs(curve.model, p);
}

}  // namespace hm
