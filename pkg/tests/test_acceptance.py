"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import numpy as np

from ectkit import phantom
from ectkit.baseline import LandweberParams, landweber
from ectkit.cli import main
from ectkit.depiht import EpihtParams, H_value, epiht_run, grad_G, prox_step
from ectkit.fileio import read_image_csv
from ectkit.forward import normalize
from ectkit.metrics import threshold_op
from ectkit.operators import apply_S, apply_St, div, grad
from ectkit.sensor import electrode_pairs


def announce(n, text):
    print(f"\nacceptance criterion {n:2d} PASS: {text}")


# ---------------------------------------------------------------- 1: ordering


def test_criterion_1_sd_ordering_and_runtime(experiment):
    report, _, wall = experiment
    for kind in report.phantoms:
        sd_d = report.sd(kind, "aadmm-depiht")
        sd_a = report.sd(kind, "aadmm")
        sd_l = report.sd(kind, "li")
        assert sd_d < sd_a, f"{kind}: {sd_d:.4f} !< aadmm {sd_a:.4f}"
        assert sd_d < sd_l, f"{kind}: {sd_d:.4f} !< li {sd_l:.4f}"
    assert wall < 60.0, f"experiment took {wall:.1f}s"
    announce(1, f"sd ordering holds on all four phantoms (grid ran in {wall:.1f}s)")


# ---------------------------------------------------------------- 2: overhead


def test_criterion_2_post_processing_overhead(experiment):
    report, _, _ = experiment
    for kind in report.phantoms:
        extra = report.elapsed(kind, "aadmm-depiht") - report.elapsed(kind, "aadmm")
        bound = 0.5 * report.elapsed(kind, "aadmm")
        assert extra <= bound, f"{kind}: overhead {extra:.3f}s > {bound:.3f}s"
    announce(2, "post-processing overhead within half of the initial solve")


# ------------------------------------------------------------- 3: prox oracle


def test_criterion_3_prox_matches_brute_force():
    rng = np.random.default_rng(42)
    worst = 0.0
    step = 1e-4
    for _ in range(200):
        P = int(rng.integers(1, 5))
        S = rng.standard_normal((3, P))
        lam = rng.standard_normal(3)
        y = rng.uniform(-1.0, 1.0, P)
        r = float(rng.uniform(0.005, 0.3))
        q = float(rng.uniform(0.5, 6.0))
        exact = prox_step(y, lam, S, r, q, operator="psi")
        dG = grad_G(y, lam, S)
        approx = np.empty(P)
        for i in range(P):
            # window large enough to contain the surrogate's vertex
            half = abs(y[i]) + abs(dG[i]) / q + 1.0
            n = int(np.ceil(half / step))
            candidates = np.arange(-n, n + 1) * step  # contains exact 0
            d = candidates - y[i]
            vals = r * (candidates != 0) + dG[i] * d + 0.5 * q * d * d
            approx[i] = candidates[np.argmin(vals)]
        worst = max(worst, float(np.max(np.abs(exact - approx))))
    assert worst <= 1e-3, f"max deviation {worst:.2e}"
    announce(3, f"prox equals brute-force surrogate minimizer (max dev {worst:.1e})")


# -------------------------------------------------------- 4: monotone descent


def test_criterion_4_monotone_descent_and_guard():
    rng = np.random.default_rng(7)
    for _ in range(100):
        M, P = int(rng.integers(3, 7)), int(rng.integers(4, 10))
        S = rng.standard_normal((M, P))
        lam = rng.standard_normal(M)
        g0 = rng.standard_normal(P)
        r = float(rng.uniform(0.01, 0.3))
        w = float(rng.uniform(0.0, 2.0))
        q = float(np.linalg.svd(S, compute_uv=False)[0] ** 2 + 1.0)
        res = epiht_run(g0, lam, S, EpihtParams(r=r, q=q, w=w, k_max=50, operator="psi"))
        h = np.concatenate([[H_value(g0, lam, S, r)], res.history["H"]])
        assert np.all(np.diff(h) <= 1e-10), "objective increased"
        # guard invariant: the (possibly reset) extrapolated point never
        # exceeds the previous iterate's objective, for any q
        assert np.all(res.history["H_extrapolated"] <= h[:-1] + 1e-12)
    announce(4, "H non-increasing under the majorizing step; guard invariant holds")


# ----------------------------------------------------------------- 5: adjoint


def test_criterion_5_adjoint_identities(grid):
    rng = np.random.default_rng(11)
    for _ in range(100):
        S = rng.standard_normal((28, grid.n_active))
        g = rng.standard_normal(grid.n_active)
        lam = rng.standard_normal(28)
        lhs = apply_S(S, g) @ lam
        rhs = g @ apply_St(S, lam)
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(g) * np.linalg.norm(lam)
        v = rng.standard_normal((2, grid.n_active))
        lhs = np.sum(grad(g, grid) * v)
        rhs = -(g @ div(v, grid))
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(g) * np.linalg.norm(v)
    announce(5, "forward/adjoint and gradient/divergence pairings hold to 1e-10")


# ---------------------------------------------------------------- 6: physics


def test_criterion_6_forward_model_physics(simulator, geometry, grid):
    # uniform-fill scaling
    c1 = simulator.capacitance_frame(simulator.uniform_map(1.0))
    high = simulator.uniform_map(4.0)
    c4 = simulator.capacitance_frame(high, fields=simulator._solve_all(high))
    rel = np.max(np.abs(c4 - 4.0 * c1) / (4.0 * c1))
    assert rel <= 1e-9, f"scaling violated at {rel:.2e}"

    # rotational symmetry of the empty pipe: same-separation pairs within
    # each mesh symmetry orbit agree (adjacent pairs form one full orbit)
    C = simulator.capacitance_frame()
    orbits = {}
    for m, (i, j) in enumerate(electrode_pairs(geometry.n_electrodes)):
        sep = min(j - i, geometry.n_electrodes - (j - i))
        key = sep if sep in (1, 3) else (sep, i % 2)
        orbits.setdefault(key, []).append(m)
    assert len(orbits[1]) == 8  # all adjacent pairs in a single orbit
    worst = 0.0
    for members in orbits.values():
        vals = C[members]
        worst = max(worst, float((vals.max() - vals.min()) / vals.mean()))
    assert worst < 1e-6, f"symmetry spread {worst:.2e}"

    # discrete maximum principle on every solve used by the pipeline
    fields = list(simulator.electrode_fields(None))
    fields += simulator._solve_all(high)
    for kind in ("cross", "v", "two_rects", "three_circles"):
        pm = simulator.permittivity_map(phantom(kind, grid))
        fields += simulator._solve_all(pm)
    for f in fields:
        assert f.potential.min() >= 0.0
        assert f.potential.max() <= 1.0
    announce(6, f"scaling exact ({rel:.1e}), symmetry spread {worst:.1e}, "
                f"potentials within [0,1] on {len(fields)} solves")


# ------------------------------------------------------------ 7: calibration


def test_criterion_7_calibration_normalization_exact(simulator, calibration, grid):
    lam_empty = normalize(simulator.capacitance_frame(), calibration)
    assert np.max(np.abs(lam_empty)) <= 1e-15
    full = simulator.permittivity_map(np.ones(grid.n_active))
    lam_full = normalize(simulator.capacitance_frame(full), calibration)
    assert np.max(np.abs(lam_full - 1.0)) <= 1e-15
    announce(7, "normalized capacitance is exactly 0 when empty and 1 when full")


# -------------------------------------------------------------- 8: sparsity


def test_criterion_8_phase1_sparsity_contract(experiment):
    report, _, _ = experiment
    checked = 0
    for kind in report.phantoms:
        result = report.cell(kind, "aadmm-depiht").result
        image = result.extras["phase1_image"]
        a = result.extras["threshold_phase1"]
        nz = image[image != 0]
        assert nz.size > 0, f"{kind}: phase-1 output is identically zero"
        assert np.all(np.abs(nz) > a)
        checked += 1
    announce(8, f"all nonzero phase-1 pixels exceed sqrt(2r/q) on {checked} runs")


# -------------------------------------------------------------- 9: landweber


def test_criterion_9_landweber_descent(experiment):
    report, _, _ = experiment
    for kind in report.phantoms:
        res = report.cell(kind, "li").result
        ratio = res.history["residual"][-1] / res.extras["initial_residual"]
        assert ratio < 0.5, f"{kind}: residual ratio {ratio:.3f}"
    rng = np.random.default_rng(3)
    for _ in range(20):
        S = rng.standard_normal((6, 11))
        lam = rng.standard_normal(6)
        sigma = np.linalg.svd(S, compute_uv=False)[0]
        res = landweber(lam, S, LandweberParams(alpha=1.9 / sigma**2, iters=100, clamp=False))
        r = np.concatenate([[res.extras["initial_residual"]], res.history["residual"]])
        assert np.all(np.diff(r) <= 1e-12)
    announce(9, "defaults halve the data residual; unclamped iteration is monotone")


# ------------------------------------------------------------ 10: threshold


def test_criterion_10_threshold_operator_properties(experiment):
    rng = np.random.default_rng(5)
    for _ in range(1000):
        g = rng.uniform(size=64)
        thr = float(rng.uniform(0.05, 0.95))
        out = threshold_op(g, thr)
        assert np.array_equal(threshold_op(out, thr), out)
        higher = threshold_op(g, min(thr + rng.uniform(0.0, 0.9 * (1 - thr) - 1e-9) + 1e-9, 0.999))
        assert np.all(higher <= out)
    report, out_dir, _ = experiment
    for kind in report.phantoms:
        for method in ("li", "aadmm"):
            path = out_dir / kind / f"{method}_thresholded.csv"
            binary = read_image_csv(path)
            assert set(np.unique(binary)) <= {0.0, 1.0}
    announce(10, "threshold operator idempotent/monotone; binary outputs emitted")


# ---------------------------------------------------------- 11: determinism


def test_criterion_11_byte_identical_reports(tmp_path):
    args = ["--seed", "0", "--frames", "10", "--li-iters", "100", "--aadmm-iters", "15"]
    for run in ("one", "two"):
        code = main(["compare", "--out-dir", str(tmp_path / run)] + args)
        assert code == 0
    a = (tmp_path / "one" / "report.csv").read_bytes()
    b = (tmp_path / "two" / "report.csv").read_bytes()
    assert a == b
    announce(11, "repeated compare runs with one seed produce byte-identical reports")
