"""Experiment runner: `vortexlab run/sweep/report`.

One JSON config per run, everything derived from (config, seed), outputs
written atomically into the configured directory.  Numeric artifacts (CSV and
JSON) are the contract; `report` renders figures next to them and, with
--verify, re-validates stored solutions by recomputing their residuals from
scratch.

Exit codes: 0 success, 2 config error, 3 solver divergence, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import io as vio
from .analysis import (
    concentration_detect,
    energy_identity_audit,
    euler_lagrange_residual,
    monotonicity_check,
    scaled_energy_profile,
)
from .dimred import hym_equivalence_check, verify_density_identity, verify_integral_identity
from .errors import (
    ArtifactCorrupt,
    ArtifactMissing,
    ConfigInvalid,
    Diverged,
    SingularLinearization,
    SolverError,
    ThresholdViolated,
    VortexlabError,
)
from .fields import BundleSpec, curvature, curvature_norm2_density, random_state
from .functional import (
    check_threshold,
    chern_weil_degree,
    derive_parameters,
    vortex_residuals,
    ymh_density,
    ymh_energy,
)
from .geometry import build_torus
from .solvers import SolveOptions, embed_vortex_as_coupled, solve_abelian_vortex
from .stability import correspondence_smoke_test, make_model, pair_is_stable, tau_walls

FOUR_PI = 4.0 * np.pi


# ---------------------------------------------------------------------------
# config handling


def _need(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigInvalid(f"missing required config field '{key}'")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigInvalid(f"config field '{key}' has wrong type {type(val).__name__}")
    return val


def _geometry(cfg: dict):
    g = _need(cfg, "geometry", dict)
    for key in ("periods", "grid"):
        if key not in g:
            raise ConfigInvalid(f"geometry fragment missing '{key}'")
    try:
        return build_torus(g["periods"], g["grid"], g.get("kahler_scale", 1.0))
    except (ValueError, VortexlabError) as err:
        raise ConfigInvalid(f"geometry: {err}") from err


def _bundle(cfg: dict, key: str = "bundle") -> BundleSpec:
    b = _need(cfg, key, dict)
    try:
        return BundleSpec(int(b["rank"]), int(b["degree"]), b.get("label", "E"))
    except (KeyError, VortexlabError) as err:
        raise ConfigInvalid(f"{key}: {err}") from err


def _tau(cfg: dict) -> float:
    if "tau" in cfg:
        return float(cfg["tau"])
    if "tau_over_4pi" in cfg:
        return float(cfg["tau_over_4pi"]) * FOUR_PI
    raise ConfigInvalid("config needs 'tau' or 'tau_over_4pi'")


def _tau_list(cfg: dict) -> list:
    if "tau_values" in cfg:
        return [float(t) for t in cfg["tau_values"]]
    if "tau_over_4pi_values" in cfg:
        return [float(t) * FOUR_PI for t in cfg["tau_over_4pi_values"]]
    if all(k in cfg for k in ("tau_over_4pi_min", "tau_over_4pi_max", "tau_count")):
        return list(
            np.linspace(cfg["tau_over_4pi_min"], cfg["tau_over_4pi_max"], int(cfg["tau_count"]))
            * FOUR_PI
        )
    raise ConfigInvalid("sweep needs 'tau_values', 'tau_over_4pi_values' or a range")


def _solver_options(cfg: dict) -> SolveOptions:
    raw = dict(cfg.get("solver", {}))
    try:
        return SolveOptions(**raw)
    except (TypeError, ValueError) as err:
        raise ConfigInvalid(f"solver options: {err}") from err


def _write_csv(path: str, fieldnames: list, rows: list):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# experiments


def _run_solve_vortex(cfg: dict, outdir: str) -> dict:
    geom = _geometry(cfg)
    bundle = _bundle(cfg)
    tau = _tau(cfg)
    opts = _solver_options(cfg)
    seed = int(cfg.get("seed", 0))
    sol = solve_abelian_vortex(bundle, cfg.get("zero_data", "auto"), tau, geom, opts, seed=seed)
    vio.save_state(os.path.join(outdir, "solution.vlst"), sol.state, meta={"tau": tau, "seed": seed})
    cert = dict(sol.certificate)
    cert.update(
        {
            "tau": tau,
            "residual_tol": opts.residual_tol,
            "iterations": sol.iterations,
            "status": sol.status,
            "newton_trace": sol.trace,
            "chern_weil_degree": chern_weil_degree(sol.state.A, geom),
            "kind": "pair",
        }
    )
    vio.write_json(os.path.join(outdir, "certificate.json"), cert)
    return {"energy": cert["energy"], "residuals": sol.residuals, "iterations": sol.iterations}


def _run_solve_coupled(cfg: dict, outdir: str) -> dict:
    geom = _geometry(cfg)
    bundle = _bundle(cfg)
    tau = _tau(cfg)
    opts = _solver_options(cfg)
    seed = int(cfg.get("seed", 0))
    sol = solve_abelian_vortex(bundle, cfg.get("zero_data", "auto"), tau, geom, opts, seed=seed)
    coup = embed_vortex_as_coupled(sol, opts)
    vio.save_state(os.path.join(outdir, "triple.vlst"), coup.state, meta={"tau": tau, "seed": seed})
    cert = dict(coup.certificate)
    cert.update(
        {
            "tau": tau,
            "tau_prime": coup.params.tau_prime,
            "sigma": coup.params.sigma,
            "residual_tol": opts.residual_tol,
            "iterations": coup.iterations,
            "status": coup.status,
            "kind": "triple",
        }
    )
    vio.write_json(os.path.join(outdir, "certificate.json"), cert)
    return {"energy": cert["energy"], "residuals": coup.residuals}


def _run_embed_coupled(cfg: dict, outdir: str) -> dict:
    # embed an existing pair solution if input_dir is given, else solve first
    if "input_dir" in cfg:
        src = os.path.join(cfg["input_dir"], "solution.vlst")
        state = vio.load_state(src)
        cert = vio.read_json(os.path.join(cfg["input_dir"], "certificate.json"))
        tau = float(cert["tau"])
        geom = state.geom
        opts = _solver_options(cfg)
        params = derive_parameters([state.A.bundle], tau, geom)
        from .solvers import VortexSolution

        sol = VortexSolution(
            state, params, vortex_residuals(state, params), 0, cert, cert.get("status", "converged")
        )
        coup = embed_vortex_as_coupled(sol, opts)
        vio.save_state(os.path.join(outdir, "triple.vlst"), coup.state, meta={"tau": tau})
        out_cert = dict(coup.certificate)
        out_cert.update({"tau": tau, "residual_tol": opts.residual_tol, "kind": "triple"})
        vio.write_json(os.path.join(outdir, "certificate.json"), out_cert)
        return {"energy": out_cert["energy"], "residuals": coup.residuals}
    return _run_solve_coupled(cfg, outdir)


def _run_check_dimred(cfg: dict, outdir: str) -> dict:
    geom = _geometry(cfg)
    tau = _tau(cfg)
    count = int(cfg.get("count", 10))
    decay = float(cfg.get("spectrum_decay", 4.0))
    seed = int(cfg.get("seed", 0))
    ranks = cfg.get("ranks", [[1, 1], [2, 1]])
    rows = []
    worst = {"density_residual": 0.0, "integral_gap": 0.0}
    last_check = None
    for pair in ranks:
        r1, r2 = int(pair[0]), int(pair[1])
        E1, E2 = BundleSpec(r1, 0, "E1"), BundleSpec(r2, 0, "E2")
        params = derive_parameters([E1, E2], tau, geom)
        for i in range(count):
            st = random_state(seed + i, decay, geom, [E1, E2], kind="triple")
            res = verify_density_identity(st, params)
            lhs, rhs, gap = verify_integral_identity(st, params)
            last_check = hym_equivalence_check(st, params)
            rows.append(
                {
                    "ranks": f"({r1},{r2})",
                    "seed": seed + i,
                    "density_residual": res,
                    "integral_gap": gap,
                    "hym_consistent": last_check["consistent"],
                }
            )
            worst["density_residual"] = max(worst["density_residual"], res)
            worst["integral_gap"] = max(worst["integral_gap"], gap)
    report = {
        "max_pointwise_residual": worst["density_residual"],
        "integral_gap": worst["integral_gap"],
        "hym_residuals": last_check["hym_residuals"],
        "vortex_residuals": last_check["vortex_residuals"],
        "tau": tau,
        "count_per_rank": count,
        "worst": worst,
        "sigma_consistency": derive_parameters(
            [BundleSpec(1, 0), BundleSpec(1, 0)], tau, geom
        ).sigma_consistency(),
        "rows": rows,
    }
    vio.write_json(os.path.join(outdir, "dimred.json"), report)
    _write_csv(
        os.path.join(outdir, "dimred.csv"),
        ["ranks", "seed", "density_residual", "integral_gap", "hym_consistent"],
        rows,
    )
    return worst


def _run_tau_sweep(cfg: dict, outdir: str) -> dict:
    geom = _geometry(cfg)
    bundle = _bundle(cfg)
    taus = _tau_list(cfg)
    opts = _solver_options(cfg)
    seed = int(cfg.get("seed", 0))
    term_names = ["curvature", "kinetic", "potential"]
    rows = []
    for tau in taus:
        verdict = check_threshold(bundle, tau, geom)
        row = {
            "tau": tau,
            "tau_over_4pi": tau / FOUR_PI,
            "threshold": verdict.value,
            "converged": False,
            "energy": "",
            "topological_minimum": "",
            "defect": "",
            "residual": "",
            "error": "",
        }
        row.update({f"term_{t}": "" for t in term_names})
        try:
            sol = solve_abelian_vortex(bundle, "auto", tau, geom, opts, force=True, seed=seed)
            row.update(
                converged=True,
                energy=sol.certificate["energy"],
                topological_minimum=sol.certificate["topological_minimum"],
                defect=sol.certificate["defect"],
                residual=max(sol.residuals.values()),
            )
            for t in term_names:
                row[f"term_{t}"] = sol.certificate["terms"].get(t, "")
        except (Diverged, SingularLinearization, ThresholdViolated) as err:
            row["error"] = type(err).__name__
        rows.append(row)
    fields = [
        "tau", "tau_over_4pi", "threshold", "converged", "energy",
        *[f"term_{t}" for t in term_names],
        "topological_minimum", "defect", "residual", "error",
    ]
    _write_csv(os.path.join(outdir, "sweep.csv"), fields, rows)
    vio.write_json(os.path.join(outdir, "sweep.json"), {"bundle": bundle.label, "rows": rows})
    converged = sum(1 for r in rows if r["converged"])
    return {"points": len(rows), "converged": converged}


def _run_density_profile(cfg: dict, outdir: str) -> dict:
    geom = _geometry(cfg)
    bundle = _bundle(cfg)
    radii = [float(r) for r in _need(cfg, "radii", list)]
    center = tuple(float(c) for c in _need(cfg, "center", list))
    source = cfg.get("source", "hym-background")
    if source == "hym-background":
        from .fields import zero_connection

        A = zero_connection(bundle, geom)
        density = np.real(curvature_norm2_density(curvature(A), geom)) + np.zeros(geom.shape)
        stationary = True
    elif source == "vortex":
        tau = _tau(cfg)
        opts = _solver_options(cfg)
        sol = solve_abelian_vortex(bundle, "auto", tau, geom, opts, seed=int(cfg.get("seed", 0)))
        density = np.real(ymh_density(sol.state, sol.params))
        stationary = True
    else:
        raise ConfigInvalid(f"unknown density source '{source}'")
    prof = scaled_energy_profile(density, center, radii, geom)
    verdict = monotonicity_check(prof, stationary=stationary)
    rows = [
        {"radius": r, "value": v, "slack": s}
        for r, v, s in zip(prof.radii, prof.values, prof.slack)
    ]
    _write_csv(os.path.join(outdir, "profile.csv"), ["radius", "value", "slack"], rows)
    vio.write_json(
        os.path.join(outdir, "profile.json"),
        {
            "center": list(center),
            "nondecreasing": verdict.nondecreasing,
            "worst_violation": verdict.worst_violation,
            "asserted": verdict.asserted,
            "rows": rows,
        },
    )
    return {"nondecreasing": verdict.nondecreasing, "worst_violation": verdict.worst_violation}


def _run_concentration(cfg: dict, outdir: str) -> dict:
    geom = _geometry(cfg)
    points = [tuple(float(c) for c in p) for p in _need(cfg, "points", list)]
    masses = [float(v) for v in _need(cfg, "masses", list)]
    lambdas = [float(v) for v in _need(cfg, "lambdas", list)]
    epsilon = float(_need(cfg, "epsilon", (int, float)))
    schedule = [float(r) for r in _need(cfg, "r_schedule", list)]
    tail = int(cfg.get("tail", 1))
    if len(points) != len(masses):
        raise ConfigInvalid("'points' and 'masses' must have equal length")

    def bump(x0, mass, lam):
        d2 = geom.torus_distance2(x0)
        q = np.exp(-d2 / (2.0 * lam**2))
        q[d2 > (4.0 * lam) ** 2] = 0.0
        return q * (mass / np.real(geom.quadrature(q)))

    family = [sum(bump(p, m, lam) for p, m in zip(points, masses)) for lam in lambdas]
    rep = concentration_detect(family, epsilon, schedule, geom, tail=tail)
    audit = energy_identity_audit(
        float(cfg.get("limit_energy", 0.0)),
        rep.theta_estimates,
        float(cfg.get("target_energy", sum(masses) + float(cfg.get("limit_energy", 0.0)))),
    )
    payload = {
        "epsilon": epsilon,
        "r_schedule": schedule,
        "detected_points": [list(p) for p in rep.detected_points],
        "theta_estimates": rep.theta_estimates,
        "injected_points": [list(p) for p in points],
        "injected_masses": masses,
        "notes": rep.notes,
        "energy_audit": audit,
    }
    vio.write_json(os.path.join(outdir, "concentration.json"), payload)
    rows = [
        {"x": ",".join(f"{c:.6f}" for c in p), "theta": t}
        for p, t in zip(rep.detected_points, rep.theta_estimates)
    ]
    _write_csv(os.path.join(outdir, "concentration.csv"), ["x", "theta"], rows)
    return {"detected": len(rep.detected_points)}


def _run_stability(cfg: dict, outdir: str) -> dict:
    model_cfg = _need(cfg, "model", dict)
    model = make_model(
        model_cfg.get("degrees", [0]),
        model_cfg.get("phi_support", [0]),
        model_cfg.get("vol", 1.0),
    )
    taus = _tau_list(cfg)
    walls = tau_walls(model)
    rows = []
    for tau in taus:
        verdict = pair_is_stable(model, tau)
        rows.append(
            {
                "tau": tau,
                "tau_over_4pi": tau / FOUR_PI,
                "verdict": verdict.kind,
                "witness": "" if verdict.witness is None else str(list(verdict.witness)),
            }
        )
    payload = {"model": {"degrees": list(model.degrees),
                         "phi_support": sorted(model.phi_support),
                         "vol": model.vol},
               "walls": walls.to_dict(), "rows": rows}
    if cfg.get("solver_crosscheck", False):
        geom = _geometry(cfg)
        payload["crosscheck"] = [
            correspondence_smoke_test(model, tau, geom) for tau in taus
        ]
    vio.write_json(os.path.join(outdir, "stability.json"), payload)
    _write_csv(os.path.join(outdir, "stability.csv"),
               ["tau", "tau_over_4pi", "verdict", "witness"], rows)
    return {"walls": len(walls.walls), "points": len(rows)}


def _run_el_residual(cfg: dict, outdir: str) -> dict:
    bundle = _bundle(cfg)
    tau = _tau(cfg)
    opts = _solver_options(cfg)
    grids = _need(cfg, "grids", list)
    geo = _need(cfg, "geometry", dict)
    rows = []
    for n in grids:
        geom = build_torus(geo["periods"], [int(n)] * len(geo["periods"]), geo.get("kahler_scale", 1.0))
        sol = solve_abelian_vortex(bundle, "auto", tau, geom, opts, seed=int(cfg.get("seed", 0)))
        coup = embed_vortex_as_coupled(sol, opts)
        el = euler_lagrange_residual(coup.state, coup.params)
        rows.append({"grid": int(n), **{k: v for k, v in el.items()}})
    ratios = {}
    for key in ("eq_A1", "eq_A2"):
        if len(rows) >= 2 and rows[-1][key] > 0:
            ratios[key] = rows[0][key] / rows[-1][key]
    payload = {"tau": tau, "rows": rows, "refinement_ratios": ratios}
    vio.write_json(os.path.join(outdir, "el.json"), payload)
    return {"ratios": ratios}


EXPERIMENTS = {
    "solve-vortex": _run_solve_vortex,
    "solve-coupled": _run_solve_coupled,
    "embed-coupled": _run_embed_coupled,
    "check-dimred": _run_check_dimred,
    "tau-sweep": _run_tau_sweep,
    "density-profile": _run_density_profile,
    "concentration": _run_concentration,
    "stability": _run_stability,
    "el-residual": _run_el_residual,
}


def run_experiment(config_path: str) -> dict:
    if not os.path.exists(config_path):
        raise ConfigInvalid(f"config file {config_path} does not exist")
    import json

    with open(config_path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigInvalid(f"config is not valid JSON: {err}") from err
    name = _need(cfg, "experiment", str)
    if name not in EXPERIMENTS:
        raise ConfigInvalid(
            f"unknown experiment '{name}'; choose from {sorted(EXPERIMENTS)}"
        )
    outdir = cfg.get("output_dir", "vortexlab-out")
    os.makedirs(outdir, exist_ok=True)
    summary = EXPERIMENTS[name](cfg, outdir)
    vio.write_json(os.path.join(outdir, "run.json"), {"experiment": name, "config": cfg, "summary": summary})
    return summary


# ---------------------------------------------------------------------------
# report


def _verify_solution(dirpath: str, cert: dict) -> list:
    """Recompute residuals of a stored solution against its certificate."""
    problems = []
    kind = cert.get("kind", "pair")
    container = os.path.join(dirpath, "solution.vlst" if kind == "pair" else "triple.vlst")
    state = vio.load_state(container)
    tau = float(cert["tau"])
    geom = state.geom
    if kind == "pair":
        params = derive_parameters([state.A.bundle], tau, geom)
    else:
        params = derive_parameters([state.A1.bundle, state.A2.bundle], tau, geom)
    residuals = vortex_residuals(state, params)
    tol = float(cert.get("residual_tol", 1e-8))
    for key, val in residuals.items():
        if val > tol:
            problems.append(f"recomputed residual {key} = {val:.3e} > stated tolerance {tol:.1e}")
    energy = ymh_energy(state, params).total
    stated = float(cert["energy"])
    if abs(energy - stated) > 1e-8 * max(1.0, abs(stated)):
        problems.append(f"recomputed energy {energy!r} != stated {stated!r}")
    return problems


def report(dirpath: str, verify: bool = False) -> int:
    """Summarize artifacts in a directory; render figures next to them."""
    from . import plots

    if not os.path.isdir(dirpath):
        raise ArtifactMissing(f"{dirpath} is not a directory")
    found = False
    failures = []

    cert_path = os.path.join(dirpath, "certificate.json")
    if os.path.exists(cert_path):
        found = True
        cert = vio.read_json(cert_path)
        print(f"solution certificate [{cert.get('kind', 'pair')}]")
        print(f"  tau            = {cert['tau']:.12g}")
        print(f"  energy         = {cert['energy']:.12g}")
        print(f"  minimum        = {cert['topological_minimum']:.12g}")
        print(f"  defect         = {cert['defect']:.3e}")
        for key, val in cert.get("residuals", {}).items():
            print(f"  residual {key:<10} = {val:.3e}")
        if cert.get("newton_trace"):
            plots.render_trace(cert["newton_trace"], os.path.join(dirpath, "newton_trace.png"))
        if verify:
            try:
                problems = _verify_solution(dirpath, cert)
            except (ArtifactMissing, ArtifactCorrupt) as err:
                problems = [str(err)]
            if problems:
                failures.extend(problems)
                for p in problems:
                    print(f"  VERIFY FAIL: {p}")
            else:
                print("  verify: residuals and energy reproduced within stated tolerances")

    sweep_path = os.path.join(dirpath, "sweep.json")
    if os.path.exists(sweep_path):
        found = True
        rows = vio.read_json(sweep_path)["rows"]
        conv = sum(1 for r in rows if r["converged"])
        print(f"tau sweep: {len(rows)} points, {conv} converged")
        for r in rows:
            status = "converged" if r["converged"] else r.get("error", "diverged")
            print(f"  tau/4pi = {r['tau_over_4pi']:.4f}  [{r['threshold']:<10}]  {status}")
        plots.render_sweep(rows, os.path.join(dirpath, "sweep.png"))

    prof_path = os.path.join(dirpath, "profile.json")
    if os.path.exists(prof_path):
        found = True
        prof = vio.read_json(prof_path)
        print(f"density profile at {prof['center']}: nondecreasing={prof['nondecreasing']}"
              f" worst={prof['worst_violation']:.3e}")
        rows = prof["rows"]
        plots.render_profile(
            [r["radius"] for r in rows],
            [r["value"] for r in rows],
            [r["slack"] for r in rows],
            os.path.join(dirpath, "profile.png"),
        )

    conc_path = os.path.join(dirpath, "concentration.json")
    if os.path.exists(conc_path):
        found = True
        conc = vio.read_json(conc_path)
        print(f"concentration: {len(conc['detected_points'])} point(s) above epsilon={conc['epsilon']}")
        for p, t in zip(conc["detected_points"], conc["theta_estimates"]):
            print(f"  x = {p} Theta = {t:.6g}")
        for warning in conc["energy_audit"].get("warnings", []):
            print(f"  note: {warning}")
        if conc["detected_points"]:
            plots.render_concentration(
                conc["detected_points"], conc["theta_estimates"],
                os.path.join(dirpath, "concentration.png"),
            )

    for name in ("dimred.json", "stability.json", "el.json"):
        path = os.path.join(dirpath, name)
        if os.path.exists(path):
            found = True
            payload = vio.read_json(path)
            print(f"{name}:")
            if name == "dimred.json":
                print(f"  worst density residual = {payload['worst']['density_residual']:.3e}")
                print(f"  worst integral gap     = {payload['worst']['integral_gap']:.3e}")
            elif name == "stability.json":
                walls = payload["walls"]["walls"]
                print(f"  walls at tau/4pi = {[w / FOUR_PI for w in walls]}")
                for r in payload["rows"]:
                    print(f"  tau/4pi = {r['tau_over_4pi']:.4f}: {r['verdict']}")
            else:
                print(f"  refinement ratios: {payload['refinement_ratios']}")

    if not found:
        raise ArtifactMissing(f"no vortexlab artifacts found in {dirpath}")
    return 4 if failures else 0


# ---------------------------------------------------------------------------
# entry point


def _apply_thread_cap():
    cap = os.environ.get("VORTEXLAB_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = argparse.ArgumentParser(prog="vortexlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")
    p_sweep = sub.add_parser("sweep", help="run a tau sweep from a JSON config")
    p_sweep.add_argument("config")
    p_rep = sub.add_parser("report", help="summarize artifacts in a directory")
    p_rep.add_argument("directory")
    p_rep.add_argument("--verify", action="store_true", help="recompute residuals of stored solutions")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            summary = run_experiment(args.config)
            print(f"ok: {summary}")
            return 0
        if args.command == "sweep":
            import json

            with open(args.config) as fh:
                cfg = json.load(fh)
            if cfg.get("experiment", "tau-sweep") != "tau-sweep":
                raise ConfigInvalid("'sweep' expects a tau-sweep config")
            cfg["experiment"] = "tau-sweep"
            import tempfile

            with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
                json.dump(cfg, fh)
                tmp = fh.name
            try:
                summary = run_experiment(tmp)
            finally:
                os.unlink(tmp)
            print(f"ok: {summary}")
            return 0
        if args.command == "report":
            return report(args.directory, verify=args.verify)
    except ConfigInvalid as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 3
    except (ArtifactMissing, ArtifactCorrupt) as err:
        print(f"verification failure: {err}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
