"""Acceptance suite: one test per criterion, each printing a single
PASS/FAIL line (collected again in the terminal summary)."""
import math
import random
import time
from fractions import Fraction

import pytest

from bdivtools import asymdim, complexes, convexrec, gradedseries, plconical, siegelcones
from bdivtools.exactnum import PI, PiScalar, RatMatrix, trace_dominance
from bdivtools.selftest import brute_force_semigroup, random_psd, random_tower

from conftest import record_criterion
from jacobi_oracle import dim_jacobi


def _grid():
    for g in range(1, 7):
        for k in (1, 2, 3):
            for m in (1, 2, 3):
                for idx in (1, 2):
                    for mi in (False, True):
                        yield asymdim.WeightIndex(g, k, m, idx, mi)


def test_criterion_01_closed_forms_agree():
    t0 = time.perf_counter()
    bad = []
    for wi in _grid():
        rep = asymdim.closed_forms(wi)
        vals = (rep.form_a, rep.form_b, rep.form_c, rep.pipeline)
        if len(set(vals)) != 1 or any(v.pi_pow != 0 for v in vals):
            bad.append(wi)
    elapsed = time.perf_counter() - t0
    spot1 = asymdim.closed_forms(asymdim.WeightIndex(1, 1, 1, 1)).value == Fraction(1, 6)
    spot2 = all(
        asymdim.closed_forms(asymdim.WeightIndex(2, k, m, 1)).value == Fraction(m * m * k ** 3, 36)
        for k in (1, 2, 3) for m in (1, 2, 3)
    )
    ok = not bad and spot1 and spot2 and elapsed < 1
    record_criterion(1, "closed forms A/B/C/pipeline agree on the grid",
                     ok, f"{len(bad)} mismatches over 432 cases, spot values {spot1 and spot2}, {elapsed:.3f}s")
    assert ok


def test_criterion_02_siegel_volume():
    v1 = asymdim.siegel_volume(1)
    form_c = v1 * (math.factorial(2) * Fraction(1, 4)) / PI
    form_a = asymdim.closed_forms(asymdim.WeightIndex(1, 1, 1)).form_a
    ok = v1 == PiScalar(Fraction(1, 3), 1) and form_c == form_a and form_c.pi_pow == 0
    record_criterion(2, "V_1 = pi/3 and reconciles form C with form A", ok, f"V_1 = {v1}, form C = {form_c}")
    assert ok


def test_criterion_03_non_cartier_certificate():
    dec = siegelcones.standard_decomposition_g1()
    phi = siegelcones.sufficiently_negative_builder(dec)
    t0 = time.perf_counter()
    details, ok = [], True
    for m in (1, 2, 3):
        d = siegelcones.cartier_diagnostic(m, phi, dec, depth=1)
        gfun = siegelcones.descended_function(m, phi)
        w = d.witness
        good = (
            d.kind == "NOT_CARTIER"
            and (w.x, w.y, w.z) == ((1, 0), (1, 1), (2, 1))
            and w.values == (0, 0, Fraction(m, 2))
            and w.verify(gfun)
            and w.values[0] + w.values[1] != w.values[2]
        )
        ok &= good
        details.append(f"m={m}:{'/'.join(str(v) for v in w.values) if w else 'none'}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1
    record_criterion(3, "NOT_CARTIER witness on ((1,0),(1,1),(2,1))", ok, f"{', '.join(details)}, {elapsed:.3f}s")
    assert ok


def _interior_primitive_rays(count):
    out = []
    s = 2
    while len(out) < count:
        for a2 in range(1, s):
            a1 = s - a2
            if math.gcd(a1, a2) == 1:
                out.append((a1, a2))
        s += 1
    return out[:count]


def test_criterion_04_lelong_consistency():
    dec = siegelcones.standard_decomposition_g1()
    phi = siegelcones.sufficiently_negative_builder(dec)
    worst = 0.0
    for m in (1, 2):
        chart = siegelcones.chart_model(m, phi)
        for a1, a2 in _interior_primitive_rays(20):
            u = (a1 + a2, a2)          # a1 (1,0) + a2 (1,1)
            exact = siegelcones.lelong_at_ray(m, phi, u)
            assert exact == siegelcones.descended_function(m, phi)(u)
            assert exact == Fraction(m * a1 * a2, a1 + a2)
            numeric = convexrec.lelong_number(chart, (a1, a2))
            worst = max(worst, abs(float(numeric) - float(exact)))
    at21 = siegelcones.lelong_at_ray(1, phi, (2, 1))
    ok = worst <= 1e-6 and at21 == Fraction(1, 2)
    record_criterion(4, "Lelong number formula matches recession of the chart model",
                     ok, f"max deviation {worst:.2e} over 20 rays x m in (1,2), value at (2,1) = {at21}")
    assert ok


def _p2():
    fan = complexes.complex_from_maximal(2, [[(1, 0), (0, 1)], [(0, 1), (-1, -1)], [(-1, -1), (1, 0)]])
    vals = {(1, 0): 0, (0, 1): 0, (-1, -1): -1}
    return plconical.PLConicalFunction.from_ray_values(fan, [vals[r] for r in fan.rays])


def _p1xp1():
    fan = complexes.complex_from_maximal(2, [[(1, 0), (0, 1)], [(0, 1), (-1, 0)], [(-1, 0), (0, -1)], [(0, -1), (1, 0)]])
    vals = {(1, 0): 0, (0, 1): 0, (-1, 0): -1, (0, -1): -1}
    return plconical.PLConicalFunction.from_ray_values(fan, [vals[r] for r in fan.rays])


def test_criterion_05_hilbert_samuel():
    t0 = time.perf_counter()
    p2, q = _p2(), _p1xp1()
    deg_p2, deg_q = plconical.toric_degree(p2), plconical.toric_degree(q)
    series_q = gradedseries.MonomialGradedSeries.of_polytope(plconical.section_polytope(q))
    series_p2 = gradedseries.MonomialGradedSeries.of_polytope(plconical.section_polytope(p2))
    vq = gradedseries.volume(series_q, 50)
    vp = gradedseries.volume(series_p2, 50)
    raw_q = float(dict(vq.sequence)[50])
    raw_p2 = float(dict(vp.sequence)[50])
    rel_q = abs(raw_q - 2) / 2
    rel_p2 = abs(vp.extrapolated - 1)
    prop_p2 = gradedseries.verify_bdiv_recovers_divisor(p2)
    prop_q = gradedseries.verify_bdiv_recovers_divisor(q)
    elapsed = time.perf_counter() - t0
    ok = (deg_p2 == 1 and deg_q == 2 and vq.exact == 2 and vp.exact == 1 and rel_q <= 0.05
          and rel_p2 <= 0.05 and prop_p2.passed and prop_q.passed and elapsed < 10)
    record_criterion(
        5, "toric degrees, Ehrhart volume sequence and bdiv = D", ok,
        f"degrees {deg_p2}, {deg_q}; O(1,1) l=50 ratio {raw_q:.4f} ({rel_q:.1%} off); "
        f"P2 l=50 raw {raw_p2:.4f}, extrapolated {vp.extrapolated:.4f}; "
        f"bdiv checks {prop_p2.passed}/{prop_q.passed}; {elapsed:.2f}s",
    )
    assert ok


def _recession_oracles():
    one = RatMatrix.of([[1]])
    a = RatMatrix.of([[2, 1], [1, 1]])
    b = RatMatrix.of([[1, 0], [0, 3]])
    return {
        "logdet g=1": convexrec.make_logdet_oracle([one, one]),
        "qol g=1": convexrec.make_qol_oracle([one, one], [(0,), (1,)]),
        "logdet g=2": convexrec.make_logdet_oracle([a, b]),
        "qol g=2": convexrec.make_qol_oracle([a, b], [(1, 0), (Fraction(1, 2), -1)]),
    }


def test_criterion_06_recession_properties():
    rng = random.Random(6)
    worst_base, worst_pos, lip_bad, gap_fail = 0.0, -math.inf, 0, []
    for name, o in _recession_oracles().items():
        for _ in range(10):
            y = tuple(Fraction(rng.randint(0, 12), 4) for _ in range(o.dim))
            x2 = tuple(c + Fraction(rng.randint(0, 40), 4) for c in o.corner)
            r1 = convexrec.recession(o, None, y).value
            r2 = convexrec.recession(o, x2, y).value
            worst_base = max(worst_base, abs(float(r1) - float(r2)))
            if o.bounded_above:
                worst_pos = max(worst_pos, float(r1))
            y2 = tuple(Fraction(rng.randint(0, 12), 4) for _ in range(o.dim))
            r3 = convexrec.recession(o, None, y2).value
            dist = math.sqrt(sum(float(p - q) ** 2 for p, q in zip(y, y2)))
            if abs(float(r1) - float(r3)) > float(o.lipschitz) * dist + 2e-6:
                lip_bad += 1
        rep = convexrec.recession_gap_check(o, samples=100, seed=rng.randint(0, 10 ** 6))
        if not rep.passed:
            gap_fail.append(name)
    ok = worst_base <= 2e-6 and worst_pos <= 1e-6 and lip_bad == 0 and not gap_fail
    record_criterion(
        6, "recession: basepoint independence, sign, Lipschitz, gap bound", ok,
        f"basepoint spread {worst_base:.1e}, max rec of bounded-above {worst_pos:.1e}, "
        f"{lip_bad} Lipschitz violations, gap failures {gap_fail or 'none'}",
    )
    assert ok


def test_criterion_07_functoriality():
    rng = random.Random(7)
    bad = 0
    for dim in (2, 3):
        for _ in range(50):
            tower, maps = random_tower(rng, dim, 3)
            direct = complexes.direct_map(tower[3], tower[0])
            composed = complexes.compose_maps(complexes.compose_maps(maps[0], maps[1]), maps[2])
            other = complexes.compose_maps(maps[0], complexes.compose_maps(maps[1], maps[2]))
            for r in tower[3].rays:
                if not (direct.apply(r) == composed.apply(r) == other.apply(r)):
                    bad += 1
                    break
    ok = bad == 0
    record_criterion(7, "composed r-maps equal direct r-maps", ok, f"{bad} of 100 towers disagree")
    assert ok


def _rand_elem(rng, g):
    a = [[int(i == j) for j in range(g)] for i in range(g)]
    if g == 1:
        a = [[rng.choice((1, -1))]]
    for _ in range(4):
        if g > 1:
            i, j = rng.sample(range(g), 2)
            c = rng.randint(-2, 2)
            a[i] = [x + c * y for x, y in zip(a[i], a[j])]
            if rng.random() < 0.3:
                a[i] = [-x for x in a[i]]
    return siegelcones.GroupElement(tuple(map(tuple, a)), tuple(rng.randint(-3, 3) for _ in range(g)))


def _rand_point(rng, g, definite=False):
    om = random_psd(rng, g, definite)
    z = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(g)]
    return siegelcones.SiegelPoint(om, om.rvecmul(z))


def _interpolated_builder(p):
    """-zeta Omega zeta^t interpolated on the cone <(1,j),(1,j+1)> holding p (g = 1)."""
    om, beta = p.omega[0, 0], p.beta[0]
    j = math.floor(beta / om)
    # p = s (1, j) + t (1, j + 1)
    t = beta - j * om
    s = om - t
    return s * (-(j * j)) + t * (-((j + 1) ** 2))


def test_criterion_08_group_and_transformation_laws():
    rng = random.Random(8)
    assoc_bad = 0
    for i in range(200):
        g = (1, 2, 3)[i % 3]
        a, b, p = _rand_elem(rng, g), _rand_elem(rng, g), _rand_point(rng, g)
        if siegelcones.act(a, siegelcones.act(b, p)) != siegelcones.act(a * b, p):
            assoc_bad += 1
    dec = siegelcones.standard_decomposition_g1()
    phi = siegelcones.sufficiently_negative_builder(dec)
    law_bad = 0
    for ray in ((1, 0), (1, 1)):
        q = siegelcones.SiegelPoint.from_vector(ray)
        for lam in range(-2, 3):
            moved = siegelcones.act(siegelcones.GroupElement.translation((lam,)), q)
            lhs = _interpolated_builder(q) - _interpolated_builder(moved)
            rhs = q.omega.quad((lam,)) + 2 * q.beta[0] * lam
            if lhs != rhs or phi(moved) != _interpolated_builder(moved):
                law_bad += 1
    gfun = siegelcones.descended_function(1, phi)
    inv_bad = 0
    for _ in range(50):
        p = _rand_point(rng, 1, definite=True)
        e = siegelcones.GroupElement.translation((rng.randint(-4, 4),))
        if gfun(p) != gfun(siegelcones.act(e, p)):
            inv_bad += 1
    ok = assoc_bad == law_bad == inv_bad == 0
    record_criterion(
        8, "group action, transformation law, invariance of the descended function", ok,
        f"{assoc_bad}/200 action failures, {law_bad}/10 law failures, {inv_bad}/50 invariance failures",
    )
    assert ok


def test_criterion_09_ratio_filter():
    rng = random.Random(9)
    mism = 0
    cases = 0
    for _ in range(20):
        gens = sorted({(rng.randint(1, 5), rng.randint(0, 6)) for _ in range(rng.randint(1, 4))})
        s = gradedseries.BidegreeSemigroup(gens)
        brute = {p for p in brute_force_semigroup(gens, 12, 12) if p[0] + p[1] <= 12}
        k0, m0 = rng.choice(gens + [(rng.randint(1, 4), rng.randint(0, 6))])
        n = Fraction(m0, k0)
        res = gradedseries.ratio_filter(s, n)
        slice_elems = {p for p in brute if p != (0, 0) and Fraction(p[1]) == n * p[0]}
        minimal = {p for p in slice_elems
                   if not any((p[0] - q[0], p[1] - q[1]) in slice_elems for q in slice_elems if q != p)}
        found = {tuple(p) for p in res.slice_generators if p[0] + p[1] <= 12}
        cases += 1
        if found != minimal:
            mism += 1
            continue
        for k in range(13):
            for m in range(13 - k):
                if s.contains(k, m) != ((k, m) in brute) or res.in_slice(k, m) != ((k, m) in slice_elems or (k, m) == (0, 0)):
                    mism += 1
                    break
    ok = mism == 0
    record_criterion(9, "ratio filter matches brute-force semigroup enumeration", ok, f"{mism} of {cases} sets disagree")
    assert ok


def test_criterion_10_trace_inequality():
    rng = random.Random(10)
    bad = 0
    for i in range(1000):
        d = 1 + i % 4
        if not trace_dominance(random_psd(rng, d, True), random_psd(rng, d), random_psd(rng, d)):
            bad += 1
    ok = bad == 0
    record_criterion(10, "trace inequality", ok, f"{1000 - bad}/1000 true")
    assert ok


def test_criterion_11_trivial_dimensions():
    vals = {
        (0, 0): 1, (-2, 5): 0, (3, -1): 0, (-1, -1): 0, (0, 3): 0, (0, 1): 0, (0, 17): 0,
    }
    got = {km: asymdim.trivial_dims(*km) for km in vals}
    ok = got == vals and asymdim.trivial_dims(4, 1) == asymdim.UNKNOWN
    record_criterion(11, "forced dimensions", ok, str({f"{k},{m}": v for (k, m), v in got.items()}))
    assert ok


def test_criterion_12_jacobi_oracle_cross_check():
    # Not gating: reports the convention gap instead of failing.
    ells = (60, 240, 960)
    ratios = [Fraction(2 * dim_jacobi(l, l), l * l) for l in ells]
    plain = asymdim.closed_forms(asymdim.WeightIndex(1, 1, 1, 1, False)).value
    doubled = asymdim.closed_forms(asymdim.WeightIndex(1, 1, 1, 1, True)).value
    converging = all(abs(ratios[i + 1] - plain) < abs(ratios[i] - plain) for i in range(len(ratios) - 1))
    close_plain = abs(float(ratios[-1] - plain)) / float(plain) < 0.01
    factor = float(doubled) / float(ratios[-1])
    ok = converging and close_plain
    record_criterion(
        12, "genus-1 Jacobi dimensions vs leading constant (not gating)", ok and abs(factor - 1) < 0.01,
        f"2 dim J_(l,l) / l^2 at l={ells} = {[round(float(r), 5) for r in ratios]}; "
        f"form A without the -1 factor = {plain}, with it (SL2(Z) contains -1) = {doubled}; "
        f"persistent factor {factor:.3f} against the doubled value",
        gating=False,
    )
    assert converging
