"""Command line interface.

Subcommands:

* ``phantom``     emit a test distribution as CSV (and optionally PGM);
* ``simulate``    generate measurement frames, calibration, sensitivity;
* ``reconstruct`` run a solver on measurement frames;
* ``postprocess`` refine an existing image with the two-phase thresholder;
* ``compare``     run the full phantom x method grid and write a report;
* ``config``      write the default configuration file.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .baseline import LandweberParams, landweber, lbp
from .depiht import depiht
from .forward import CapacitanceSimulator, average_frames, normalize
from .metrics import normalize_image
from .phantoms import PHANTOM_KINDS, phantom
from .pipeline import ExperimentConfig, run_experiment
from .results import ReconResult
from .sensor import build_geometry, build_grid
from .tv_admm import AADMMParams, aadmm_solve


def _add_sensor_args(p):
    p.add_argument("--n-electrodes", type=int, default=8)
    p.add_argument("--diameter-mm", type=float, default=76.0)
    p.add_argument("--span-deg", type=float, default=30.0)
    p.add_argument("--grid-side", type=int, default=48)


def _add_solver_args(p):
    p.add_argument("--solver-refine", type=int, default=2,
                   help="solver cells per reconstruction cell")
    p.add_argument("--solver-tol", type=float, default=1e-10)
    p.add_argument("--eps-low", type=float, default=1.0)
    p.add_argument("--eps-high", type=float, default=4.0)


def _add_depiht_args(p):
    p.add_argument("--q", type=float, default=2.0, help="shared proximal parameter")
    p.add_argument("--r1", type=float, default=0.01)
    p.add_argument("--w1", type=float, default=1000.0)
    p.add_argument("--k1", type=int, default=2)
    p.add_argument("--r2", type=float, default=1.0)
    p.add_argument("--w2", type=float, default=1.0)
    p.add_argument("--k2", type=int, default=10)
    p.add_argument("--nu-policy", choices=("freeze_previous", "zero"),
                   default="freeze_previous")


def _geometry_grid(args):
    geometry = build_geometry(args.n_electrodes, args.diameter_mm, args.span_deg)
    return geometry, build_grid(args.grid_side, geometry)


def _simulator(args, geometry, grid):
    return CapacitanceSimulator(
        geometry, grid, refine=args.solver_refine, tol=args.solver_tol,
        eps_low=args.eps_low, eps_high=args.eps_high,
    )


def _load_measurement(args, grid):
    S = fileio.read_sensitivity_csv(args.sensitivity)
    if S.shape[1] != grid.n_active:
        raise SystemExit(
            f"sensitivity matrix has {S.shape[1]} pixels, grid has {grid.n_active}"
        )
    cal = fileio.read_calibration_csv(args.calibration)
    frames = fileio.read_frames_csv(args.frames)
    lam = normalize(average_frames(frames), cal)
    return S, lam


def _write_result(args, result: ReconResult, grid):
    fileio.write_image_csv(args.out, result.image, grid)
    if args.pgm:
        fileio.write_image_pgm(args.pgm, normalize_image(result.image), grid)
    if getattr(args, "history", None):
        with open(args.history, "w") as fh:
            keys = [k for k, v in result.history.items() if np.ndim(v) == 1]
            fh.write(",".join(keys) + "\n")
            for row in zip(*(result.history[k] for k in keys)):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"{result.method}: wrote {args.out} ({result.elapsed:.3f}s)")


def cmd_phantom(args):
    _, grid = _geometry_grid(args)
    image = phantom(args.kind, grid)
    fileio.write_image_csv(args.out, image, grid)
    if args.pgm:
        fileio.write_image_pgm(args.pgm, image, grid)
    print(f"wrote {args.out}")


def cmd_simulate(args):
    geometry, grid = _geometry_grid(args)
    sim = _simulator(args, geometry, grid)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    image = phantom(args.phantom, grid)
    frames = sim.simulate_frames(image, args.snr_db, args.frames, args.seed)
    fileio.write_frames_csv(out / "frames.csv", frames)
    fileio.write_calibration_csv(out / "calibration.csv", sim.calibration())
    fileio.write_sensitivity_csv(out / "sensitivity.csv", sim.sensitivity())
    fileio.write_image_csv(out / "truth.csv", image, grid)
    print(f"wrote frames/calibration/sensitivity/truth under {out}")


def cmd_reconstruct(args):
    _, grid = _geometry_grid(args)
    S, lam = _load_measurement(args, grid)
    # --iters binds to the chosen method's main solver
    li_iters = args.iters if args.iters is not None else 3000
    aadmm_iters = args.iters if args.iters is not None else 300
    li_params = LandweberParams(alpha=args.alpha, iters=li_iters, clamp=not args.no_clamp)
    aadmm_params = AADMMParams(mu=args.mu, eps=args.eps, beta=args.beta,
                               iters=aadmm_iters, cg_tol=args.cg_tol,
                               restart_eta=args.restart_eta)
    if args.method == "lbp":
        result = ReconResult(image=lbp(lam, S), method="lbp")
    elif args.method == "li":
        result = landweber(lam, S, li_params)
    elif args.method == "aadmm":
        result = aadmm_solve(lam, S, grid, aadmm_params)
    else:  # aadmm-depiht / li-depiht compositions
        if args.method == "aadmm-depiht":
            init = aadmm_solve(lam, S, grid, aadmm_params)
        else:
            init = landweber(lam, S, li_params)
        result = depiht(init.image, lam, S, params=_depiht_params_from(args))
        result.method = args.method
        result.elapsed += init.elapsed
    _write_result(args, result, grid)


def _depiht_params_from(args):
    from .depiht import DepihtParams, EpihtParams

    return DepihtParams(
        phase1=EpihtParams(r=args.r1, q=args.q, w=args.w1, k_max=args.k1,
                           operator="psi"),
        phase2=EpihtParams(r=args.r2, q=args.q, w=args.w2, k_max=args.k2,
                           operator="nu", nu_policy=args.nu_policy),
    )


def cmd_postprocess(args):
    _, grid = _geometry_grid(args)
    S, lam = _load_measurement(args, grid)
    g_init = fileio.read_image_csv(args.init, grid)
    result = depiht(g_init, lam, S, params=_depiht_params_from(args))
    _write_result(args, result, grid)


def cmd_compare(args):
    cfg = ExperimentConfig.from_ini(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.snr_db is not None:
        cfg.snr_db = args.snr_db
    if args.frames is not None:
        cfg.n_frames = args.frames
    if args.li_iters is not None:
        cfg.li.iters = args.li_iters
    if args.aadmm_iters is not None:
        cfg.aadmm.iters = args.aadmm_iters
    report = run_experiment(cfg, out_dir=args.out_dir)
    print(report.summary_text())
    failed = [c for c in report.cells if c.error]
    return 1 if failed else 0


def cmd_config(args):
    ExperimentConfig.write_defaults(args.out)
    print(f"wrote default config to {args.out}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ectkit",
        description="capacitance tomography simulation and reconstruction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="emit a test permittivity distribution")
    p.add_argument("--kind", choices=PHANTOM_KINDS, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm", help="also write a PGM rendering")
    _add_sensor_args(p)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("simulate", help="simulate measurement data for a phantom")
    p.add_argument("--phantom", choices=PHANTOM_KINDS, required=True)
    p.add_argument("--snr-db", type=float, default=35.0)
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _add_sensor_args(p)
    _add_solver_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct an image from frames")
    p.add_argument("--method", choices=("lbp", "li", "aadmm", "aadmm-depiht", "li-depiht"),
                   required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--sensitivity", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm")
    p.add_argument("--history", help="write per-iteration traces as CSV")
    p.add_argument("--iters", type=int, default=None,
                   help="iterations of the chosen method (li: 3000, aadmm: 300)")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--no-clamp", action="store_true")
    p.add_argument("--mu", type=float, default=2000.0)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--beta", type=float, default=50.0)
    p.add_argument("--cg-tol", type=float, default=1e-6)
    p.add_argument("--restart-eta", type=float, default=0.999)
    _add_depiht_args(p)
    _add_sensor_args(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("postprocess", help="refine an existing image")
    p.add_argument("--method", choices=("depiht",), default="depiht")
    p.add_argument("--init", required=True, help="initial image CSV")
    p.add_argument("--frames", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--sensitivity", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm")
    _add_depiht_args(p)
    _add_sensor_args(p)
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("compare", help="run the full phantom x method grid")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="INI config file (defaults are built in)")
    p.add_argument("--seed", type=int)
    p.add_argument("--snr-db", type=float)
    p.add_argument("--frames", type=int)
    p.add_argument("--li-iters", type=int)
    p.add_argument("--aadmm-iters", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("config", help="write the default config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_config)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    code = args.func(args)
    return 0 if code is None else code


if __name__ == "__main__":
    sys.exit(main())
