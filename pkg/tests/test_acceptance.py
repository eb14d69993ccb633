"""The ten primary acceptance criteria, one test each.

Every test records a single pass/fail line; the lines are printed in the
terminal summary (and with ``-s`` as the test runs).
"""
import json
import time

import numpy as np

from conftest import ACCEPTANCE, CORPUS, corpus_map
from test_certify import linear, restrict
from test_convexgeo import face_enumeration_distance
from tamecert.certify import (
    FAIL,
    PASS,
    FPSpec,
    build_fp,
    check_Ce,
    check_S,
    check_thm1,
    check_thm3,
    check_thm4,
    injectivity_probe,
    kernel_pair_witness,
    sample_jacobians,
    verify_inverse,
    winding_number,
)
from tamecert.cli import load_manifest, main
from tamecert.convexgeo import min_norm_point
from tamecert.matgeo import nu


def record(n, checks, detail=""):
    """Print and store the line for criterion ``n``; fail if any check is false."""
    bad = [k for k, ok in checks.items() if not ok]
    ok = not bad
    line = detail + (f"  failed: {', '.join(bad)}" if bad else "")
    ACCEPTANCE.append((n, ok, line))
    assert ok, line


def _fp_path(name):
    return CORPUS / "fp" / f"{name}.json"


def smooth_points(f, count, seed):
    X = f.domain.sample(np.random.default_rng(seed), 2 * count)
    J, status = f.jacobian_batch(X)
    keep = np.flatnonzero(status == 0)[:count]
    return X[keep], J[keep]


# ---------------------------------------------------------------- 1

def test_criterion_1_cubic_ce(capsys):
    t0 = time.perf_counter()
    code = main(["check", "corpus/cubic.tmap", "--ce", "--json"])
    elapsed = time.perf_counter() - t0
    rep = json.loads(capsys.readouterr().out)
    w = rep["certificates"][0]["witnesses"]
    cfg = rep["config"]
    n_samples = len(sample_jacobians(corpus_map("cubic")))
    with capsys.disabled():
        record(1, {
            "exit 0": code == 0,
            "no kernel witness": w["kernel_witness_count"] == 0,
            "121 grid + 500 random": cfg["grid"] ** 2 == 121 and cfg["random"] == 500
            and n_samples == 621,
            "720 directions": w["directions_tested"] == 720,
            "runtime < 2 s": elapsed < 2.0,
        }, f"exit={code} samples={n_samples} directions={w['directions_tested']} "
           f"time={elapsed:.2f}s")


# ---------------------------------------------------------------- 2

def test_criterion_2_kernel3d_witness():
    f = corpus_map("kernel3d")
    S = sample_jacobians(f)
    ce = check_Ce(S)

    def A(a):
        return np.array([[0.0, 0, 0], [0, 0, 0], [1, 0, a]])

    d1 = np.linalg.norm(S.matrices - A(0.5), axis=(1, 2))
    d2 = np.linalg.norm(S.matrices - A(1.5), axis=(1, 2))
    eps_ker = 1e-7 * S.sigma_max
    # nearest pairs first; random samples just off y = 0 are close in norm but
    # have a nonsingular sum, so take the nearest pair that yields a witness
    k = 300
    cand = sorted((d1[i] + d2[j], i, j) for i in np.argsort(d1)[:k] for j in np.argsort(d2)[:k])
    found = None
    for dist, i, j in cand:
        w = kernel_pair_witness(S.matrices[i], S.matrices[j], eps_ker)
        if w is not None:
            found = (dist, i, j, w[0])
            break
    target = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
    align = abs(found[3] @ target) if found else 0.0
    a_pair = (S.matrices[found[1]][2, 2], S.matrices[found[2]][2, 2]) if found else (np.nan,) * 2
    record(2, {
        "Ce fails": ce.verdict == FAIL,
        "kernel witnesses": ce.witnesses["kernel_witness_count"] > 0,
        "pair found": found is not None,
        "|<u, (1,0,-1)/sqrt2>| >= 0.99": align >= 0.99,
    }, f"pair a=({a_pair[0]:.3f}, {a_pair[1]:.3f}) alignment={align:.4f}")


# ---------------------------------------------------------------- 3

def test_criterion_3_threesheet():
    f = corpus_map("threesheet")
    S = sample_jacobians(f)
    det_err = float(np.abs(np.linalg.det(S.matrices) - 3).max())
    r = 0.5
    mats = [f.jacobian_batch(np.array([[r * np.cos(t), r * np.sin(t)]]))[0][0]
            for t in (0.0, 2 * np.pi / 3, -2 * np.pi / 3)]
    mn = min_norm_point(np.array(mats).reshape(3, 4))
    wres = winding_number(f, radius=r)
    probe = injectivity_probe(f)
    wit = probe.witnesses.get("witness")
    radii = (np.linalg.norm(wit["x"]), np.linalg.norm(wit["x_prime"])) if wit else (0.0, 1.0)
    record(3, {
        "det = 3 within 1e-9": det_err <= 1e-9,
        "|w| <= 1e-9": mn.distance <= 1e-9,
        "weights 1/3": np.abs(mn.weights - 1 / 3).max() <= 1e-6,
        "degree 3": wres.degree == 3,
        "probe fails": probe.verdict == FAIL,
        "equal radius": abs(radii[0] - radii[1]) <= 1e-6 * max(radii),
    }, f"det_err={det_err:.1e} |w|={mn.distance:.1e} degree={wres.degree} "
       f"witness radii=({radii[0]:.6f}, {radii[1]:.6f})")


# ---------------------------------------------------------------- 4

def test_criterion_4_bilipschitz():
    f = corpus_map("bilipschitz")
    X, J = smooth_points(f, 1000, seed=40)
    x, y = X.T
    P = (x**4 - x**2 * y**2 + 2 * y**4) / (x**4 - x**2 * y**2 + y**4)
    rel = float(np.abs(np.linalg.det(J) / P**2 - 1).max())
    K = check_thm3(f, sample_jacobians(f), [1, 0], [1, 0]).witnesses["K_hat"]
    F, G = build_fp(FPSpec.load(_fp_path("bilipschitz")))
    inv = verify_inverse(F, G, count=1000)
    record(4, {
        "1000 smooth points": len(X) == 1000,
        "det = P^2 within 1e-8": rel <= 1e-8,
        "K1 >= 1 - 1e-6": K[0] >= 1 - 1e-6,
        "K2 >= 1 - 1e-6": K[1] >= 1 - 1e-6,
        "inverse <= 1e-8": inv <= 1e-8,
    }, f"det rel err={rel:.1e} K_hat=({K[0]:.6f}, {K[1]:.6f}) inverse err={inv:.1e}")


# ---------------------------------------------------------------- 5

def test_criterion_5_nonlip():
    f = corpus_map("nonlip")
    S = sample_jacobians(f)
    X, J = S.points, S.matrices
    x, y = X.T
    P = (2 * x**4 + y**6) / (x**4 + y**6)
    rel = float(np.abs(np.linalg.det(J) / P**5 - 1).max())
    d11 = float(J[:, 0, 0].min())
    F, G = build_fp(FPSpec.load(_fp_path("nonlip")))
    inv = verify_inverse(F, G, count=1000)
    record(5, {
        "det = P^5 within 1e-8": rel <= 1e-8,
        "df1/dx >= 1 - 1e-6": d11 >= 1 - 1e-6,
        "inverse <= 1e-8": inv <= 1e-8,
    }, f"samples={len(S)} det rel err={rel:.1e} min df1/dx={d11:.6f} inverse err={inv:.1e}")


# ---------------------------------------------------------------- 6

SMOOTH_CANDIDATES = ["cubic", "zsquare", "zcube", "nonlip", "bilipschitz", "diag13", "identity"]


def _random_restriction(rng):
    name = SMOOTH_CANDIDATES[rng.integers(len(SMOOTH_CANDIDATES))]
    a, b = (float(t) for t in rng.uniform(0.2, 0.6, 2))
    w = float(rng.uniform(0.1, 0.4))
    box = f"box [{a!r}, {a + w!r}], [{b!r}, {b + w!r}]"
    return f"{name} on {box}", restrict(corpus_map(name), box)


def test_criterion_6_thm1_consistency():
    rng = np.random.default_rng(60)
    cases = []
    while len(cases) < 20:
        n = int(rng.integers(2, 4))
        A = rng.standard_normal((n, n))
        if nu(A) > 0.05:
            cases.append((f"linear {n}x{n}", linear(A)))
    restrictions = 0
    for _ in range(200):
        if restrictions == 10:
            break
        label, f = _random_restriction(rng)
        if check_thm1(sample_jacobians(f), f=f).verdict == PASS:
            cases.append((label, f))
            restrictions += 1
    worst = np.inf
    for label, f in cases:
        delta = check_thm1(sample_jacobians(f), f=f).witnesses["delta"]
        ell = injectivity_probe(f, pair_budget=10_000).witnesses["ell_hat"]
        worst = min(worst, ell - delta)
    record(6, {
        "10 restrictions": restrictions == 10,
        "ell_hat >= delta_hat - 1e-6": worst >= -1e-6,
    }, f"maps={len(cases)} min(ell_hat - delta_hat)={worst:.3g}")


# ---------------------------------------------------------------- 7

def test_criterion_7_nu_inverse_norm():
    rng = np.random.default_rng(70)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        A = rng.standard_normal((n, n))
        worst = max(worst, abs(nu(A) * np.linalg.norm(np.linalg.inv(A), 2) - 1))
    record(7, {"|nu ||A^-1|| - 1| <= 1e-9": worst <= 1e-9}, f"max error={worst:.1e}")


# ---------------------------------------------------------------- 8

def grid_refined_distance(P, res=8, floor=1e-13):
    """Simplex-lattice search refined by pattern moves along ``e_i - e_j``."""
    from itertools import combinations

    P = np.asarray(P, float)
    N = len(P)
    if N == 1:
        return float(np.linalg.norm(P[0]))
    best, lam = np.inf, None
    for bars in combinations(range(res + N - 1), N - 1):
        cand = np.diff((-1,) + bars + (res + N - 1,)) - 1
        val = float(np.linalg.norm(cand @ P / res))
        if val < best:
            best, lam = val, cand / res
    G = P @ P.T
    h = 1.0 / res
    I, J = np.array([(i, j) for i in range(N) for j in range(N) if i != j]).T
    noise = 1e-14 * np.abs(G).max()  # gradient gaps below this are rounding
    for _ in range(200_000):
        if h <= floor:
            break
        step = np.minimum(h, lam[J])
        g = G @ lam
        # change of lam' G lam for lam + s (e_i - e_j)
        delta = 2 * step * (g[I] - g[J]) + step**2 * (G[I, I] - 2 * G[I, J] + G[J, J])
        k = int(np.argmin(delta))
        if delta[k] < -noise * step[k] and step[k] > 0:
            lam[I[k]] += step[k]
            lam[J[k]] -= step[k]
        else:
            h /= 2
    return float(np.sqrt(max(lam @ G @ lam, 0.0)))


def test_criterion_8_min_norm_oracle():
    rng = np.random.default_rng(80)
    worst_grid = worst_face = 0.0
    cert_ok = True
    for _ in range(1000):
        d = int(rng.integers(1, 4))
        N = int(rng.integers(1, 8))
        P = rng.standard_normal((N, d)) + rng.standard_normal(d)
        r = min_norm_point(P)
        worst_grid = max(worst_grid, abs(r.distance - grid_refined_distance(P)))
        worst_face = max(worst_face, abs(r.distance - face_enumeration_distance(P)))
        w = r.point
        cert_ok &= bool((P @ w >= w @ w - 1e-10).all())
    record(8, {
        "grid oracle within 1e-6": worst_grid <= 1e-6,
        "face oracle within 1e-6": worst_face <= 1e-6,
        "support certificate": cert_ok,
    }, f"max |diff| grid={worst_grid:.1e} faces={worst_face:.1e}")


# ---------------------------------------------------------------- 9

def test_criterion_9_winding():
    # p(dz^k) = (z/|z|)^(k-1) winds k - 1 times around the unit circle
    got, homeo = {}, {}
    for k, name in [(1, "identity"), (2, "zsquare"), (3, "zcube")]:
        f = corpus_map(name)
        got[k] = winding_number(f, radius=1.0).winding
        homeo[k] = injectivity_probe(f).verdict != FAIL
    record(9, {
        "windings 0, 1, 2": got == {1: 0, 2: 1, 3: 2},
        "null-homotopic iff k = 1": all((got[k] == 0) == (k == 1) for k in got),
        "probe agrees": all(homeo[k] == (k == 1) for k in homeo),
    }, f"windings={got}")


# ---------------------------------------------------------------- 10

def test_criterion_10_counterexamples(capsys, tmp_path):
    f = corpus_map("nonproper")
    S = sample_jacobians(f)
    np_s = check_S(f).verdict
    np_ce = check_Ce(S).verdict
    np_4 = check_thm4(f, S).conditions
    g = corpus_map("ypow23")
    T = sample_jacobians(g)
    y_3 = check_thm3(g, T).conditions
    y_4 = check_thm4(g, T).conditions

    exits = {}
    for cmd in load_manifest()["commands"]:
        argv = [str(tmp_path) if a == "OUTDIR" else a for a in cmd["argv"]]
        exits[" ".join(cmd["argv"])] = (main(argv), cmd["exit"])
    capsys.readouterr()
    verify = main(["corpus", "verify"])
    lines = capsys.readouterr().out.splitlines()
    n_ok = sum(line.startswith("ok") for line in lines)
    with capsys.disabled():
        record(10, {
            "NonProper S fails": np_s == FAIL,
            "NonProper F2 fails": np_4["F2"] == FAIL,
            "NonProper Ce passes": np_ce == PASS,
            "NonProper P1, P2 pass": np_4["P1"] == PASS and np_4["P2"] == PASS,
            "ypow23 P1, P2 pass": y_4["P1"] == PASS and y_4["P2"] == PASS,
            "ypow23 R2 lower passes": y_3["R2_lower"] == PASS,
            "ypow23 R1 lower fails": y_3["R1_lower"] == FAIL,
            "exit codes": all(a == b for a, b in exits.values()),
            "manifest verdicts": verify == 0,
        }, f"commands={len(exits)} manifest verdicts ok={n_ok}/{len(lines)}")

