"""Quick invariant sweep over every module, for ``bdivtools selftest``."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import asymdim, complexes, convexrec, exactnum, gradedseries, plconical, siegelcones
from .exactnum import RatMatrix

__all__ = ["SelftestReport", "run_selftest", "random_tower", "random_psd", "brute_force_semigroup"]


@dataclass
class SelftestReport:
    passed: dict = field(default_factory=dict)
    total: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def record(self, module: str, name: str, ok: bool, detail: str = ""):
        self.total[module] = self.total.get(module, 0) + 1
        self.passed[module] = self.passed.get(module, 0) + int(bool(ok))
        if not ok:
            self.failures.append({"module": module, "check": name, "detail": detail})

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "modules": {m: {"passed": self.passed[m], "total": self.total[m]} for m in sorted(self.total)},
            "failures": self.failures,
        }


# ---- generators shared with the test-suite -------------------------------


def random_psd(rng: random.Random, d: int, definite: bool = False, size: int = 3) -> RatMatrix:
    """M M^t for a random integer (or small rational) d x r matrix."""
    while True:
        r = d if definite else rng.randint(1, d)
        m = RatMatrix.of([[Fraction(rng.randint(-size, size), rng.randint(1, 2)) for _ in range(r)] for _ in range(d)])
        p = m @ m.T
        if not definite or exactnum.psd_certify(p).is_pd:
            return p


def _random_interior_point(rng: random.Random, cone: complexes.LatticeCone) -> tuple:
    coeffs = [rng.randint(1, 3) for _ in cone.generators]
    v = [sum(c * g[i] for c, g in zip(coeffs, cone.generators)) for i in range(cone.dim_ambient)]
    return complexes.primitive(v)


def random_tower(rng: random.Random, dim: int, steps: int = 3):
    """Simplicial start complex and ``steps`` stellar subdivisions at random
    points; returns the complexes and the one-step maps."""
    base_rays = [tuple(int(i == j) for j in range(dim)) for i in range(dim)]
    base_rays.append(tuple(rng.randint(1, 2) for _ in range(dim)))
    cones = []
    for skip in range(dim):
        gens = [r for i, r in enumerate(base_rays[:dim]) if i != skip] + [base_rays[-1]]
        cones.append(gens)
    cur = complexes.complex_from_maximal(dim, cones)
    tower, maps = [cur], []
    for _ in range(steps):
        maxi = cur.maximal_cones
        c = cur.cone_generators(maxi[rng.randrange(len(maxi))])
        v = _random_interior_point(rng, complexes.LatticeCone(c, dim))
        finer, r = complexes.subdivide_at(cur, v)
        tower.append(finer)
        maps.append(r)
        cur = finer
    return tower, maps


def brute_force_semigroup(gens, k_max: int, m_max: int) -> set:
    """Breadth-first closure of the generators inside the box."""
    seen = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = (a[0] + g[0], a[1] + g[1])
                if b[0] <= k_max and b[1] <= m_max and b not in seen:
                    seen.add(b)
                    nxt.append(b)
        frontier = nxt
    return seen


# ---- per-module checks -----------------------------------------------------


def _exactnum(rep: SelftestReport, rng: random.Random):
    mod = "exactnum"
    rep.record(mod, "bernoulli", [exactnum.bernoulli(n) for n in (0, 1, 2, 4)] == [1, Fraction(-1, 2), Fraction(1, 6), Fraction(-1, 30)])
    rep.record(mod, "zeta", [exactnum.zeta_negative(k) for k in (1, 2, 3)] == [Fraction(-1, 12), Fraction(1, 120), Fraction(-1, 252)])
    bad = 0
    for _ in range(100):
        d = rng.randint(1, 4)
        if not exactnum.trace_dominance(random_psd(rng, d, True), random_psd(rng, d), random_psd(rng, d)):
            bad += 1
    rep.record(mod, "trace dominance", bad == 0, f"{bad} failures")
    ok = True
    for _ in range(50):
        d = rng.randint(1, 4)
        m = RatMatrix.of([[rng.randint(-3, 3) for _ in range(d)] for _ in range(d)])
        s = m + m.T
        res = exactnum.psd_certify(s)
        if res.kind == "NOT_PSD" and s.quad(res.witness) >= 0:
            ok = False
        if res.kind == "PSD_WITH_KERNEL" and any(any(s.vecmul(v)) for v in res.vectors):
            ok = False
    rep.record(mod, "psd certificates", ok)


def _complexes(rep: SelftestReport, rng: random.Random):
    mod = "complexes"
    for dim in (2, 3):
        ok = True
        for _ in range(5):
            tower, maps = random_tower(rng, dim)
            direct = complexes.direct_map(tower[-1], tower[0])
            composed = complexes.compose_maps(maps[0], complexes.compose_maps(maps[1], maps[2]))
            ok &= complexes.maps_agree_on_rays(direct, composed)
        rep.record(mod, f"functoriality dim {dim}", ok)
    c = complexes.complex_from_maximal(2, [[(1, 0), (1, 3)]])
    sm, _ = complexes.smooth_complex(c)
    rep.record(mod, "smoothing", sm.is_smooth)


def _p1xp1():
    fan = complexes.complex_from_maximal(2, [[(1, 0), (0, 1)], [(0, 1), (-1, 0)], [(-1, 0), (0, -1)], [(0, -1), (1, 0)]])
    vals = {(1, 0): 0, (0, 1): 0, (-1, 0): -1, (0, -1): -1}
    return plconical.PLConicalFunction.from_ray_values(fan, [vals[r] for r in fan.rays])


def _p2():
    fan = complexes.complex_from_maximal(2, [[(1, 0), (0, 1)], [(0, 1), (-1, -1)], [(-1, -1), (1, 0)]])
    vals = {(1, 0): 0, (0, 1): 0, (-1, -1): -1}
    return plconical.PLConicalFunction.from_ray_values(fan, [vals[r] for r in fan.rays])


def _plconical(rep: SelftestReport, rng: random.Random):
    mod = "plconical"
    rep.record(mod, "degree P2", plconical.toric_degree(_p2()) == 1)
    rep.record(mod, "degree P1xP1", plconical.toric_degree(_p1xp1()) == 2)
    cone = complexes.complex_from_maximal(2, [[(1, 0), (1, 1)]])
    f = plconical.ConicalOracle(cone, lambda v: v[1] * v[1] / v[0] if v[0] else Fraction(0))
    res = plconical.pl_test(f, cone, depth=1)
    rep.record(mod, "non-PL witness", res.kind == "NOT_PL" and res.witness.verify(f))


def _convexrec(rep: SelftestReport, rng: random.Random):
    mod = "convexrec"
    one = RatMatrix.of([[1]])
    oracles = {
        "logdet g=1": convexrec.make_logdet_oracle([one, one]),
        "qol g=1": convexrec.make_qol_oracle([one, one], [(0,), (1,)]),
        "logdet g=2": convexrec.make_logdet_oracle([RatMatrix.of([[2, 1], [1, 1]]), RatMatrix.of([[1, 0], [0, 3]])]),
        "qol g=2": convexrec.make_qol_oracle([RatMatrix.of([[2, 1], [1, 1]]), RatMatrix.of([[1, 0], [0, 3]])],
                                             [(1, 0), (0, 1)]),
    }
    for name, o in oracles.items():
        rep.record(mod, f"gap {name}", convexrec.recession_gap_check(o, samples=20, seed=rng.randint(0, 10**6)).passed)
        y = (Fraction(1), Fraction(2))
        a = convexrec.recession(o, None, y).value
        b = convexrec.recession(o, (Fraction(3), Fraction(2)), y).value
        rep.record(mod, f"basepoint {name}", abs(float(a) - float(b)) <= 2e-6)


def _gradedseries(rep: SelftestReport, rng: random.Random):
    mod = "gradedseries"
    sq = gradedseries.MonomialGradedSeries.of_polytope(plconical.section_polytope(_p1xp1()))
    v = gradedseries.volume(sq, 20)
    rep.record(mod, "volume", v.exact == 2 and abs(v.extrapolated - 2) < 0.05)
    rep.record(mod, "bdiv recovers divisor", gradedseries.verify_bdiv_recovers_divisor(_p2(), l_max=8).passed)
    ok = True
    for _ in range(5):
        gens = sorted({(rng.randint(1, 4), rng.randint(0, 5)) for _ in range(rng.randint(1, 4))})
        s = gradedseries.BidegreeSemigroup(gens)
        brute = brute_force_semigroup(gens, 12, 12)
        for k in range(13):
            for m in range(13 - k):
                ok &= s.contains(k, m) == ((k, m) in brute)
    rep.record(mod, "semigroup membership", ok)


def _siegelcones(rep: SelftestReport, rng: random.Random):
    mod = "siegelcones"
    dec = siegelcones.standard_decomposition_g1()
    rep.record(mod, "admissibility", siegelcones.admissibility_check(dec).passed)
    phi = siegelcones.sufficiently_negative_builder(dec)
    rep.record(mod, "builder flags", phi.has("sufficiently_negative") and phi.has("admissible"))
    rep.record(mod, "transformation law", siegelcones.divisorial_check(phi).passed)
    ok = True
    for _ in range(40):
        g = rng.choice((1, 2))
        a = _random_group_element(rng, g)
        b = _random_group_element(rng, g)
        p = _random_siegel_point(rng, g)
        ok &= siegelcones.act(a, siegelcones.act(b, p)) == siegelcones.act(a * b, p)
    rep.record(mod, "group action", ok)
    gfun = siegelcones.descended_function(1, phi)
    ok = True
    for _ in range(20):
        p = _random_siegel_point(rng, 1, definite=True)
        e = siegelcones.GroupElement.translation((rng.randint(-3, 3),))
        ok &= gfun(p) == gfun(siegelcones.act(e, p))
    rep.record(mod, "invariance", ok)
    for m in (1, 2, 3):
        d = siegelcones.cartier_diagnostic(m, phi)
        rep.record(mod, f"non-Cartier m={m}", d.kind == "NOT_CARTIER" and d.witness.values == (0, 0, Fraction(m, 2)))


def _random_group_element(rng: random.Random, g: int) -> siegelcones.GroupElement:
    a = [[int(i == j) for j in range(g)] for i in range(g)]
    for _ in range(3):
        if g == 1:
            a = [[rng.choice((1, -1)) * a[0][0]]]
            break
        i, j = rng.sample(range(g), 2)
        c = rng.randint(-2, 2)
        a[i] = [x + c * y for x, y in zip(a[i], a[j])]
    lam = [rng.randint(-3, 3) for _ in range(g)]
    return siegelcones.GroupElement(tuple(map(tuple, a)), tuple(lam))


def _random_siegel_point(rng: random.Random, g: int, definite: bool = False) -> siegelcones.SiegelPoint:
    om = random_psd(rng, g, definite)
    z = [Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(g)]
    return siegelcones.SiegelPoint(om, om.rvecmul(z))


def _asymdim(rep: SelftestReport, rng: random.Random):
    mod = "asymdim"
    ok = True
    for g in range(1, 7):
        for k in (1, 2, 3):
            for m in (1, 2, 3):
                for idx in (1, 2):
                    for mi in (False, True):
                        try:
                            asymdim.closed_forms(asymdim.WeightIndex(g, k, m, idx, mi))
                        except asymdim.InconsistentFormsError:
                            ok = False
    rep.record(mod, "closed forms agree", ok)
    rep.record(mod, "spot value", asymdim.closed_forms(asymdim.WeightIndex(1, 1, 1)).value == Fraction(1, 6))
    rep.record(mod, "trivial dims", (asymdim.trivial_dims(0, 0), asymdim.trivial_dims(-2, 5), asymdim.trivial_dims(0, 3)) == (1, 0, 0))


SUITES: dict[str, Callable] = {
    "exactnum": _exactnum,
    "complexes": _complexes,
    "plconical": _plconical,
    "convexrec": _convexrec,
    "gradedseries": _gradedseries,
    "siegelcones": _siegelcones,
    "asymdim": _asymdim,
}


def run_selftest(seed: int = 0) -> SelftestReport:
    rep = SelftestReport()
    for name, fn in SUITES.items():
        rng = random.Random(f"{seed}:{name}")
        try:
            fn(rep, rng)
        except Exception as e:  # a crashing suite counts as one failed check
            rep.record(name, "suite raised", False, f"{type(e).__name__}: {e}")
    return rep
