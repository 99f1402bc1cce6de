// Trace of Frobenius for p of good reduction via baby-step giant-step.
//
// Random points are drawn on E or on its quadratic twist without square roots:
// for r = f(x) != 0 the point (x r, r^2) lies on Y^2 = X^3 + A r^2 X + B r^3,
// which is E when r is a square and the twist otherwise. Orders of points on
// each curve constrain #E = p + 1 - a and #E' = p + 1 + a; we stop once one
// value of a in the Hasse interval survives.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "hm/curve.hpp"

namespace hm {
namespace {

class Field {
 public:
  explicit Field(std::uint64_t p) : p_(p), inv_(1.0 / static_cast<double>(p)) {}

  std::uint64_t p() const { return p_; }
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + p_ - b; }
  // Products stay below 2^52, so the double quotient is off by at most one.
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t prod = a * b;
    const auto q = static_cast<std::uint64_t>(static_cast<double>(prod) * inv_);
    auto r = static_cast<std::int64_t>(prod - q * p_);
    if (r < 0) r += static_cast<std::int64_t>(p_);
    if (r >= static_cast<std::int64_t>(p_)) r -= static_cast<std::int64_t>(p_);
    return static_cast<std::uint64_t>(r);
  }
  std::uint64_t pow(std::uint64_t a, std::uint64_t e) const {
    std::uint64_t r = 1;
    while (e) {
      if (e & 1U) r = mul(r, a);
      a = mul(a, a);
      e >>= 1;
    }
    return r;
  }
  std::uint64_t inv(std::uint64_t a) const {
    std::int64_t t = 0, nt = 1;
    auto r = static_cast<std::int64_t>(p_), nr = static_cast<std::int64_t>(a);
    while (nr != 0) {
      const std::int64_t q = r / nr;
      std::tie(t, nt) = std::pair(nt, t - q * nt);
      std::tie(r, nr) = std::pair(nr, r - q * nr);
    }
    if (t < 0) t += static_cast<std::int64_t>(p_);
    return static_cast<std::uint64_t>(t);
  }
  int legendre(std::uint64_t a) const {
    if (a == 0) return 0;
    return pow(a, (p_ - 1) / 2) == 1 ? 1 : -1;
  }

 private:
  std::uint64_t p_;
  double inv_;
};

struct Jac {
  std::uint64_t x = 0, y = 1, z = 0;  // z == 0 is the point at infinity
  bool infinite() const { return z == 0; }
};

struct Aff {
  std::uint64_t x, y;
};

class CurveOps {
 public:
  CurveOps(const Field& f, std::uint64_t a) : f_(f), a_(a) {}

  Jac dbl(const Jac& P) const {
    if (P.infinite() || P.y == 0) return {};
    const Field& f = f_;
    const std::uint64_t xx = f.mul(P.x, P.x), yy = f.mul(P.y, P.y), yyyy = f.mul(yy, yy);
    const std::uint64_t zz = f.mul(P.z, P.z);
    const std::uint64_t s = f.mul(4 % f.p(), f.mul(P.x, yy));
    const std::uint64_t m = f.add(f.mul(3 % f.p(), xx), f.mul(a_, f.mul(zz, zz)));
    const std::uint64_t x3 = f.sub(f.mul(m, m), f.add(s, s));
    const std::uint64_t y3 = f.sub(f.mul(m, f.sub(s, x3)), f.mul(8 % f.p(), yyyy));
    const std::uint64_t z3 = f.mul(f.add(P.y, P.y), P.z);
    return {x3, y3, z3};
  }

  Jac madd(const Jac& P, const Aff& Q) const {
    if (P.infinite()) return {Q.x, Q.y, 1};
    const Field& f = f_;
    const std::uint64_t z1z1 = f.mul(P.z, P.z);
    const std::uint64_t u2 = f.mul(Q.x, z1z1);
    const std::uint64_t s2 = f.mul(Q.y, f.mul(P.z, z1z1));
    const std::uint64_t h = f.sub(u2, P.x), r = f.sub(s2, P.y);
    if (h == 0) return r == 0 ? dbl(P) : Jac{};
    const std::uint64_t hh = f.mul(h, h), hhh = f.mul(h, hh), v = f.mul(P.x, hh);
    const std::uint64_t x3 = f.sub(f.sub(f.mul(r, r), hhh), f.add(v, v));
    const std::uint64_t y3 = f.sub(f.mul(r, f.sub(v, x3)), f.mul(P.y, hhh));
    return {x3, y3, f.mul(P.z, h)};
  }

  Jac mul(std::uint64_t k, const Aff& Q) const {
    Jac R;
    for (int bit = 63; bit >= 0; --bit) {
      R = dbl(R);
      if ((k >> bit) & 1U) R = madd(R, Q);
    }
    return R;
  }

  Aff normalize(const Jac& P) const {
    const std::uint64_t zi = f_.inv(P.z), zi2 = f_.mul(zi, zi);
    return {f_.mul(P.x, zi2), f_.mul(P.y, f_.mul(zi2, zi))};
  }

  // All inputs finite.
  std::vector<Aff> normalize_all(const std::vector<Jac>& pts) const {
    const std::size_t n = pts.size();
    std::vector<std::uint64_t> prefix(n);
    std::uint64_t acc = 1;
    for (std::size_t i = 0; i < n; ++i) {
      prefix[i] = acc;
      acc = f_.mul(acc, pts[i].z);
    }
    std::uint64_t inv = f_.inv(acc);
    std::vector<Aff> out(n);
    for (std::size_t i = n; i-- > 0;) {
      const std::uint64_t zi = f_.mul(inv, prefix[i]);
      inv = f_.mul(inv, pts[i].z);
      const std::uint64_t zi2 = f_.mul(zi, zi);
      out[i] = {f_.mul(pts[i].x, zi2), f_.mul(pts[i].y, f_.mul(zi2, zi))};
    }
    return out;
  }

 private:
  const Field& f_;
  std::uint64_t a_;
};

std::vector<std::pair<std::uint64_t, int>> factor_small(std::uint64_t n) {
  std::vector<std::pair<std::uint64_t, int>> out;
  for (std::uint64_t q = 2; q * q <= n; q += (q == 2 ? 1 : 2)) {
    if (n % q) continue;
    int e = 0;
    while (n % q == 0) {
      n /= q;
      ++e;
    }
    out.emplace_back(q, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

// Some positive multiple of ord(P); searches the window [lo, hi] that must contain one.
std::uint64_t find_multiple(const CurveOps& ops, const Aff& P, std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t width = hi - lo + 1;
  const auto m = static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(width) / 2.0)));

  std::vector<Jac> baby_j;
  baby_j.reserve(m);
  Jac cur{P.x, P.y, 1};
  for (std::uint64_t j = 1; j <= m; ++j) {
    if (cur.infinite()) return j;
    baby_j.push_back(cur);
    cur = ops.madd(cur, P);
  }
  const std::vector<Aff> baby_a = ops.normalize_all(baby_j);
  struct Entry {
    std::uint64_t x, y, j;
  };
  std::vector<Entry> baby(m);
  for (std::uint64_t j = 0; j < m; ++j) baby[j] = {baby_a[j].x, baby_a[j].y, j + 1};
  std::sort(baby.begin(), baby.end(), [](const Entry& a, const Entry& b) {
    return a.x != b.x ? a.x < b.x : a.j < b.j;
  });
  for (std::size_t i = 1; i < baby.size(); ++i) {
    if (baby[i].x == baby[i - 1].x) {
      const std::uint64_t j1 = baby[i - 1].j, j2 = baby[i].j;
      return baby[i].y == baby[i - 1].y ? (j1 > j2 ? j1 - j2 : j2 - j1) : j1 + j2;
    }
  }

  const std::uint64_t stride = 2 * m + 1;
  const Jac gj = ops.mul(stride, P);
  if (gj.infinite()) return stride;
  const Aff g = ops.normalize(gj);

  const std::uint64_t giants = (width + stride - 1) / stride;
  std::vector<Jac> giant(giants);
  Jac r = ops.mul(lo + m, P);
  for (std::uint64_t i = 0; i < giants; ++i) {
    if (r.infinite()) return lo + m + i * stride;
    giant[i] = r;
    r = ops.madd(r, g);
  }
  const std::vector<Aff> giant_a = ops.normalize_all(giant);
  for (std::uint64_t i = 0; i < giants; ++i) {
    const std::uint64_t c = lo + m + i * stride;
    auto it = std::lower_bound(baby.begin(), baby.end(), giant_a[i].x,
                               [](const Entry& e, std::uint64_t x) { return e.x < x; });
    if (it != baby.end() && it->x == giant_a[i].x) {
      return it->y == giant_a[i].y ? c - it->j : c + it->j;
    }
  }
  throw std::logic_error("bsgs: no multiple of the point order in the Hasse window");
}

std::uint64_t order_from_multiple(const CurveOps& ops, const Aff& P, std::uint64_t multiple) {
  std::uint64_t ord = multiple;
  for (auto [q, e] : factor_small(multiple)) {
    for (int k = 0; k < e; ++k) {
      if (ops.mul(ord / q, P).infinite()) {
        ord /= q;
      } else {
        break;
      }
    }
  }
  return ord;
}

std::int64_t reduce128(__int128 v, std::int64_t p) {
  auto r = static_cast<std::int64_t>(v % p);
  return r < 0 ? r + p : r;
}

}  // namespace

std::int64_t trace_bsgs(const WeierstrassModel& model, std::uint32_t p) {
  if (p < 5) throw std::invalid_argument("trace_bsgs: p must be at least 5");
  if (p >= (1U << 26)) throw std::invalid_argument("trace_bsgs: p too large for the field kernel");
  const Field f(p);
  const auto P = static_cast<std::int64_t>(p);
  // Short model Y^2 = X^3 - 27 c4 X - 54 c6, isomorphic to E over F_p for p >= 5.
  const auto A = static_cast<std::uint64_t>(reduce128(-27 * model.c4(), P));
  const auto B = static_cast<std::uint64_t>(reduce128(-54 * model.c6(), P));
  const std::uint64_t disc = f.add(f.mul(4, f.mul(A, f.mul(A, A))), f.mul(27 % p, f.mul(B, B)));
  if (disc == 0) throw std::domain_error("trace_bsgs: bad reduction at p=" + std::to_string(p));

  const std::uint64_t hasse = isqrt(4ULL * p);
  const std::uint64_t lo = p + 1 - hasse, hi = p + 1 + hasse;

  std::mt19937_64 rng(0x9E3779B97F4A7C15ULL ^ p);
  std::uint64_t lcm_e = 1, lcm_t = 1;
  for (int iter = 0; iter < 200; ++iter) {
    const std::uint64_t x = rng() % p;
    const std::uint64_t rhs = f.add(f.mul(f.add(f.mul(x, x), A), x), B);
    if (rhs == 0) continue;
    const int sigma = f.legendre(rhs);
    const CurveOps ops(f, f.mul(A, f.mul(rhs, rhs)));
    const Aff pt{f.mul(x, rhs), f.mul(rhs, rhs)};
    const std::uint64_t ord = order_from_multiple(ops, pt, find_multiple(ops, pt, lo, hi));
    std::uint64_t& L = sigma == 1 ? lcm_e : lcm_t;
    L = std::lcm(L, ord);

    // Candidates a with p+1-a = 0 mod lcm_e and p+1+a = 0 mod lcm_t.
    int found = 0;
    std::int64_t a = 0;
    if (lcm_e >= lcm_t) {
      for (std::uint64_t n = (lo + lcm_e - 1) / lcm_e * lcm_e; n <= hi; n += lcm_e) {
        if ((2ULL * p + 2 - n) % lcm_t == 0) {
          ++found;
          a = P + 1 - static_cast<std::int64_t>(n);
        }
      }
    } else {
      for (std::uint64_t n = (lo + lcm_t - 1) / lcm_t * lcm_t; n <= hi; n += lcm_t) {
        if ((2ULL * p + 2 - n) % lcm_e == 0) {
          ++found;
          a = static_cast<std::int64_t>(n) - P - 1;
        }
      }
    }
    if (found == 1) return a;
    if (found == 0) throw std::logic_error("trace_bsgs: inconsistent point orders");
  }
  return trace_naive(model, p);
}

}  // namespace hm
