#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ecrv/clpq.hpp"
#include "support.hpp"

using namespace ecrv;
using namespace ecrv::clpq;
using ecrv::test::Gen;
using ecrv::test::Q;
using Op = LinConstraint::Op;

namespace {

LinExpr X(int v, long k = 1) { return LinExpr::Var(v, Rational(k)); }
LinExpr K(long n, long d = 1) { return LinExpr(Q(n, d)); }
LinConstraint C(const LinExpr& a, Op op, const LinExpr& b) { return LinConstraint::Make(a, op, b); }

ConstraintStore Store(const Conjunction& cs) {
  ConstraintStore s;
  s.AddAll(cs);
  return s;
}

// Independent Fourier-Motzkin over `sum a*x + c (<|<=) 0` rows.
struct Row {
  std::map<int, Rational> a;
  Rational c;
  bool strict = false;
};

std::vector<Row> Rows(const Conjunction& cs) {
  std::vector<Row> out;
  for (const auto& k : cs) {
    Row r;
    for (const auto& [v, q] : k.expr.coeffs()) r.a[v] = q;
    r.c = k.expr.constant();
    if (k.rel == Rel::kEq) {
      out.push_back(r);
      for (auto& [v, q] : r.a) q = -q;
      r.c = -r.c;
      out.push_back(r);
    } else {
      r.strict = k.rel == Rel::kLt;
      out.push_back(r);
    }
  }
  return out;
}

bool FmSat(std::vector<Row> rows) {
  std::set<int> vars;
  for (const Row& r : rows) {
    for (const auto& [v, q] : r.a) vars.insert(v);
  }
  for (int v : vars) {
    std::vector<Row> lo, hi, rest;
    for (Row& r : rows) {
      auto it = r.a.find(v);
      if (it == r.a.end() || it->second == 0) {
        rest.push_back(r);
      } else {
        (it->second > 0 ? hi : lo).push_back(r);
      }
    }
    for (const Row& l : lo) {
      for (const Row& h : hi) {
        Rational kl = h.a.at(v), kh = -l.a.at(v);
        Row n;
        for (const auto& [w, q] : l.a) n.a[w] += q * kl;
        for (const auto& [w, q] : h.a) n.a[w] += q * kh;
        n.a.erase(v);
        n.c = l.c * kl + h.c * kh;
        n.strict = l.strict || h.strict;
        rest.push_back(n);
      }
    }
    rows = std::move(rest);
  }
  for (const Row& r : rows) {
    bool zero = std::all_of(r.a.begin(), r.a.end(), [](const auto& p) { return p.second == 0; });
    if (!zero) continue;
    if (r.strict ? !(r.c < 0) : !(r.c <= 0)) return false;
  }
  return true;
}

LinConstraint RandomConstraint(Gen& g, int nvars, bool equalities = true) {
  LinExpr e(Q(g.Int(-4, 4)));
  bool any = false;
  while (!any) {
    for (int v = 0; v < nvars; ++v) {
      int k = g.Int(-2, 2);
      if (k != 0 && g.Coin(70)) {
        e += X(v, k);
        any = true;
      }
    }
  }
  std::vector<Op> ops{Op::kLt, Op::kLe, Op::kGt, Op::kGe};
  if (equalities) ops.push_back(Op::kEq);
  return C(e, g.Pick(ops), K(0));
}

Conjunction RandomConj(Gen& g, int nvars, int n, bool equalities = true) {
  Conjunction cs;
  for (int i = 0; i < n; ++i) cs.push_back(RandomConstraint(g, nvars, equalities));
  return cs;
}

bool HoldsAll(const Conjunction& cs, const std::map<VarId, Rational>& p) {
  return std::all_of(cs.begin(), cs.end(), [&](const LinConstraint& c) { return c.Holds(p); });
}

std::map<VarId, Rational> RandomPoint(Gen& g, int nvars) {
  std::map<VarId, Rational> p;
  for (int v = 0; v < nvars; ++v) p[v] = g.Frac(-4, 4, 8);
  return p;
}

}  // namespace

TEST_CASE("add detects empty intersections and absorbs tautologies") {
  ConstraintStore s;
  CHECK(s.Add(C(X(0), Op::kLe, K(3))));
  CHECK_FALSE(s.Add(C(X(0), Op::kGe, K(5))));
  CHECK(s.unsat());

  ConstraintStore t;
  CHECK(t.Add(C(X(0), Op::kEq, X(0))));
  CHECK(t.size() == 0);
}

TEST_CASE("satisfiability with strict bounds") {
  CHECK(IsSatisfiable({C(X(0), Op::kLt, K(1)), C(X(0), Op::kGt, K(0))}));
  ConstraintStore open = Store({C(X(0), Op::kLt, K(1)), C(X(0), Op::kGt, K(0))});
  auto w = open.Witness();
  CHECK(w.at(0) > 0);
  CHECK(w.at(0) < 1);
  CHECK_FALSE(IsSatisfiable({C(X(0), Op::kLt, K(0)), C(X(0), Op::kGt, K(0))}));
  CHECK_FALSE(IsSatisfiable({C(X(0, 2) + X(1), Op::kLe, K(4)), C(X(0), Op::kGe, K(1)), C(X(1), Op::kGe, K(3))}));
}

TEST_CASE("entailment") {
  CHECK(Store({C(X(0), Op::kEq, K(2))}).Entails(C(X(0), Op::kLe, K(3))));
  CHECK_FALSE(Store({C(X(0), Op::kLe, K(3))}).Entails(C(X(0), Op::kEq, K(2))));
  // Bolus completion: T2 = T1 + 20/4 with T1 = 2.
  ConstraintStore s = Store({C(X(0), Op::kEq, K(2)), C(X(1), Op::kEq, X(0) + K(20, 4))});
  CHECK(s.Entails(C(X(1), Op::kEq, K(7))));
  CHECK(s.FixedValue(1) == Q(7));
}

TEST_CASE("projection") {
  ConstraintStore a = Store({C(X(0), Op::kEq, X(1)), C(X(1), Op::kEq, K(3))});
  Conjunction pa = a.Project({0});
  REQUIRE(pa.size() == 1);
  CHECK(Store(pa).FixedValue(0) == Q(3));

  Conjunction box{C(K(0), Op::kLe, X(0)), C(X(0), Op::kLe, K(4))};
  Conjunction pb = RemoveRedundant(Store(box).Project({0}));
  CHECK(Store(pb).EntailsAll(box));
  CHECK(Store(box).EntailsAll(pb));

  // T2 = T + 5, T2 <= 9, T >= 0 projected on T.
  ConstraintStore c = Store({C(X(1), Op::kEq, X(0) + K(5)), C(X(1), Op::kLe, K(9)), C(X(0), Op::kGe, K(0))});
  Conjunction pc = c.Project({0});
  CHECK(Store(pc).EntailsAll(box));
  CHECK(Store(box).EntailsAll(pc));
}

TEST_CASE("complement forms") {
  // not (T1 < T < T2) with T1 = var 1, T2 = var 2.
  auto d = Complement({C(X(1), Op::kLt, X(0)), C(X(0), Op::kLt, X(2))});
  REQUIRE(d.size() == 2);
  CHECK(d[0].size() == 1);
  CHECK(Store(d[0]).Entails(C(X(0), Op::kLe, X(1))));
  CHECK(Store(d[1]).Entails(C(X(0), Op::kGe, X(2))));

  auto e = Complement({C(X(0), Op::kEq, K(3))});
  REQUIRE(e.size() == 2);
  CHECK(Store(e[0]).Entails(C(X(0), Op::kLt, K(3))));
  CHECK(Store(e[1]).Entails(C(X(0), Op::kGt, K(3))));

  auto f = Complement({C(X(0), Op::kLe, K(2)), C(X(1), Op::kLe, K(2))});
  REQUIRE(f.size() == 2);
  CHECK(Store(f[0]).Entails(C(X(0), Op::kGt, K(2))));
  CHECK(Store(f[1]).Entails(C(X(0), Op::kLe, K(2))));
  CHECK(Store(f[1]).Entails(C(X(1), Op::kGt, K(2))));
}

TEST_CASE("threshold crossings") {
  Window after2{Q(2), std::nullopt};
  // 4*(T - 2) = 20.
  CHECK(SolveCrossing(Q(4), Q(-8), Q(20), after2) == Q(7));
  CHECK_FALSE(SolveCrossing(Q(5), Q(0), Q(0), Window{Q(0), std::nullopt}));
  CHECK_FALSE(SolveCrossing(Q(0), Q(3), Q(5), Window{Q(0), std::nullopt}));
  CHECK_THROWS_AS(SolveCrossing(Q(0), Q(5), Q(5), Window{Q(0), std::nullopt}), DegenerateSlopeError);
}

TEST_CASE("rational literals print exactly") {
  LinConstraint c = C(X(0), Op::kLe, K(1, 3));
  std::string s = ToString(c, [](VarId) { return std::string("T"); });
  CHECK(s == "T #=< 1/3");
}

TEST_CASE("property: satisfiability matches an independent Fourier-Motzkin") {
  Gen g(101);
  for (int i = 0; i < 300; ++i) {
    int n = g.Int(1, 3);
    Conjunction cs = RandomConj(g, n, g.Int(1, 5));
    bool expect = FmSat(Rows(cs));
    CAPTURE(i);
    CHECK(IsSatisfiable(cs) == expect);
    ConstraintStore s = Store(cs);
    CHECK(s.IsSatisfiable() == expect);
    if (expect) CHECK(HoldsAll(cs, s.Witness()));
  }
}

TEST_CASE("property: entailment is unsatisfiability of every complement disjunct") {
  Gen g(202);
  for (int i = 0; i < 300; ++i) {
    int n = g.Int(1, 3);
    Conjunction cs = RandomConj(g, n, g.Int(1, 4));
    ConstraintStore s = Store(cs);
    if (s.unsat()) continue;
    LinConstraint c = RandomConstraint(g, n);
    bool by_complement = true;
    for (const Conjunction& d : Complement({c})) {
      Conjunction both = cs;
      both.insert(both.end(), d.begin(), d.end());
      by_complement = by_complement && !FmSat(Rows(both));
    }
    CAPTURE(i);
    CHECK(s.Entails(c) == by_complement);
  }
}

TEST_CASE("property: projection preserves satisfiability and contains projected points") {
  Gen g(303);
  for (int i = 0; i < 150; ++i) {
    int n = g.Int(2, 6);
    Conjunction cs = RandomConj(g, n, g.Int(1, 6));
    std::set<VarId> keep;
    for (int v = 0; v < n; ++v) {
      if (g.Coin()) keep.insert(v);
    }
    if (keep.empty()) keep.insert(0);
    ConstraintStore s = Store(cs);
    Conjunction p = s.unsat() ? Conjunction{} : s.Project(keep);
    CAPTURE(i);
    if (!s.unsat()) {
      CHECK(IsSatisfiable(p));
      // Any solution restricted to `keep` satisfies the projection.
      auto w = s.Witness();
      CHECK(HoldsAll(p, w));
    } else {
      CHECK_FALSE(FmSat(Rows(cs)));
    }
  }
}

TEST_CASE("property: grid sampling agrees with satisfiability on boxed stores") {
  Gen g(404);
  for (int i = 0; i < 60; ++i) {
    int n = g.Int(1, 2);
    Conjunction cs = RandomConj(g, n, g.Int(1, 3), false);
    for (int v = 0; v < n; ++v) {
      cs.push_back(C(X(v), Op::kGe, K(-3)));
      cs.push_back(C(X(v), Op::kLe, K(3)));
    }
    bool sampled = false;
    std::map<VarId, Rational> p;
    std::function<void(int)> walk = [&](int v) {
      if (sampled) return;
      if (v == n) {
        sampled = HoldsAll(cs, p);
        return;
      }
      for (int k = -24; k <= 24 && !sampled; ++k) {
        p[v] = Q(k, 8);
        walk(v + 1);
      }
    };
    walk(0);
    bool sat = IsSatisfiable(cs);
    CAPTURE(i);
    if (sampled) CHECK(sat);
    if (sat) {
      // Projection onto the first variable keeps the sampled coordinate.
      Conjunction proj = Store(cs).Project({0});
      if (sampled) CHECK(HoldsAll(proj, p));
    }
  }
}

TEST_CASE("property: complement disjuncts are disjoint and cover the rest") {
  Gen g(505);
  for (int i = 0; i < 100; ++i) {
    int n = g.Int(1, 3);
    Conjunction cs = RandomConj(g, n, g.Int(1, 3));
    auto ds = Complement(cs);
    for (int k = 0; k < 40; ++k) {
      auto p = RandomPoint(g, n);
      int count = HoldsAll(cs, p) ? 1 : 0;
      for (const auto& d : ds) count += HoldsAll(d, p) ? 1 : 0;
      CAPTURE(i);
      CHECK(count == 1);
    }
  }
}
