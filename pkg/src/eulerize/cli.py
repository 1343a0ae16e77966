"""Command-line entry points: gen, certify, pluglab, metric, verify.

Exit codes: 0 success (including a verified infeasible answer), 1 input
or validation error, 2 undecided, 3 verification failure.  All artifact
files are written atomically; the JSON and text report forms print the
same numbers (the text form embeds the JSON rendering of every value).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dec
from .certifier import (DualCertificate, PrimalCertificate, assemble,
                        verify_dual, verify_primal)
from .errors import ToolError
from .fields import EmbeddedPlug, Placement, gen_abc, insert_plug
from .grid import Grid3, OneForm, ScalarField0, VectorField
from .lpsolve import solve
from .metric import build_metric, verify_euler
from .plug_lab import (flux_decay_study, limit_cycle_study, radial_entry_curve,
                       _fit_bernoulli)
from .plugs import PlugSpec, check_plug_axioms, gen_stream_plug, gen_wilson_plug
from .vf3 import read_vf3, write_atomic, write_vf3

EXIT_OK, EXIT_INPUT, EXIT_UNDECIDED, EXIT_VERIFY = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Echoed into every report; a run is reproducible from it."""

    command: str
    n: int = 16
    L: float = 2.0 * np.pi
    generator: str | None = None
    gen_params: list = field(default_factory=list)
    field_path: str | None = None
    mode: str = "adapted"
    eta: float = 1e-6
    eps_dual: float = 1e-6
    eps_cycle: float = 1e-5
    budget: float | None = None
    plug_variant: str | None = None
    plug_spec_path: str | None = None
    out_dir: str = "."
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def _write_json(path: str, payload: dict) -> None:
    write_atomic(path, (json.dumps(payload, indent=2, default=float) + "\n").encode())


def _report(out_dir: str, name: str, payload: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, name + ".json"), payload)
    lines = [f"== {name} =="]

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(f"{prefix}{k}.", v)
        else:
            lines.append(f"{prefix[:-1]} = {json.dumps(obj, default=float)}")

    walk("", payload)
    text = "\n".join(lines) + "\n"
    write_atomic(os.path.join(out_dir, name + ".txt"), text.encode())
    sys.stdout.write(text)


def _load_field(cfg: RunConfig) -> VectorField:
    if cfg.field_path:
        f = read_vf3(cfg.field_path)
        if not isinstance(f, VectorField):
            raise ToolError("bad-input", f"{cfg.field_path} does not hold a vector field")
        return f
    grid = Grid3(cfg.n, cfg.L)
    if cfg.generator == "abc":
        A, B, C = (cfg.gen_params + [1.0, 1.0, 1.0])[:3]
        return gen_abc(A, B, C, grid)
    if cfg.generator == "vertical":
        speed = (cfg.gen_params + [1.0])[0]
        return VectorField.from_components(grid, 0.0, 0.0, speed)
    if cfg.generator in ("plugged-wilson", "plugged-stream"):
        spec = _load_spec(cfg, cfg.generator.split("-")[1])
        plug = (gen_wilson_plug if spec.variant == "wilson" else gen_stream_plug)(spec)
        ambient = VectorField.from_components(grid, 0.0, 0.0, 1.0)
        pl = Placement(center=np.full(3, cfg.L / 2),
                       half_extent=np.array([spec.r_out, spec.r_out,
                                             min(1.0 + 0.5, cfg.L / 2 - 1e-9)]))
        return insert_plug(ambient, plug, pl)
    raise ToolError("bad-input", f"unknown generator {cfg.generator!r}")


def _load_spec(cfg: RunConfig, default_variant: str = "wilson") -> PlugSpec:
    if cfg.plug_spec_path:
        with open(cfg.plug_spec_path) as f:
            return PlugSpec.from_json(f.read())
    return PlugSpec(variant=cfg.plug_variant or default_variant)


def cmd_gen(cfg: RunConfig) -> int:
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    if cfg.plug_variant:
        spec = _load_spec(cfg)
        plug = (gen_wilson_plug if spec.variant == "wilson" else gen_stream_plug)(spec)
        write_atomic(os.path.join(out, "plug_spec.json"), (spec.to_json() + "\n").encode())
        write_atomic(os.path.join(out, "axiom_report.json"),
                     (plug.report.to_json() + "\n").encode())
        grid = Grid3(cfg.n, cfg.L)
        pl = Placement(center=np.full(3, cfg.L / 2),
                       half_extent=np.array([spec.r_out, spec.r_out, 1.5]))
        fieldv = insert_plug(VectorField.from_components(grid, 0.0, 0.0, 1.0), plug, pl)
        write_vf3(os.path.join(out, "field.vf3"), fieldv)
    else:
        fieldv = _load_field(cfg)
        write_vf3(os.path.join(out, "field.vf3"), fieldv)
    div = dec.div_field(fieldv)
    _report(out, "gen_report", {
        "config": cfg.to_json(),
        "min_speed": fieldv.min_norm(),
        "divergence_sup": float(np.abs(div.values).max()),
        "files": ["field.vf3"],
    })
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    X = _load_field(cfg)
    prob = assemble(cfg.mode, X, Y=None, eta=cfg.eta)
    rep = solve(prob, budget=cfg.budget, eps_dual=cfg.eps_dual, eps_cycle=cfg.eps_cycle)
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    files = []
    if rep.primal is not None:
        write_vf3(os.path.join(out, "alpha.vf3"), rep.primal.alpha)
        files.append("alpha.vf3")
        if rep.primal.B is not None:
            write_vf3(os.path.join(out, "bernoulli.vf3"), rep.primal.B)
            files.append("bernoulli.vf3")
        cert_json = {"kind": "primal", "mode": rep.mode, "T": rep.primal.T,
                     "report": rep.primal.report}
        _write_json(os.path.join(out, "certificate.json"), cert_json)
        files.append("certificate.json")
    if rep.dual is not None:
        grid = prob.grid
        write_vf3(os.path.join(out, "dual_mu.vf3"),
                  ScalarField0(grid, rep.dual.mu_weights.reshape((grid.n,) * 3)))
        write_vf3(os.path.join(out, "dual_lambda.vf3"),
                  OneForm(grid, rep.dual.lam.reshape((3,) + (grid.n,) * 3)))
        files += ["dual_mu.vf3", "dual_lambda.vf3"]
        cert_json = {"kind": "dual", "mode": rep.mode, "report": rep.dual.report}
        _write_json(os.path.join(out, "certificate.json"), cert_json)
        files.append("certificate.json")
    write_vf3(os.path.join(out, "field.vf3"), X)
    files.append("field.vf3")

    payload = {
        "config": cfg.to_json(),
        "status": rep.status,
        "s_star": rep.s_star,
        "iterations": rep.iterations,
        "wall_time": rep.wall_time,
        "certificate": rep.certificate_report(),
        "diagnostics": rep.diagnostics,
        "files": files,
    }
    if rep.status == "feasible" and cfg.mode == "adapted":
        g = build_metric(rep.primal.alpha, X, volume_compatible=True)
        payload["metric"] = {**g.diagnostics,
                            **verify_euler(g, X, rep.primal.B)}
        _write_metric(os.path.join(out, "metric.vf3"), g)
        files.append("metric.vf3")
    _report(out, "certify_report", payload)
    return EXIT_OK if rep.status in ("feasible", "infeasible") else EXIT_UNDECIDED


def _write_metric(path: str, g) -> None:
    # write_vf3 only touches .grid and .values, so a shim carries the
    # 6-component symmetric-tensor payload
    class _Shim:
        grid = g.grid
        values = g.components6()

    write_vf3(path, _Shim(), kind="metric6")


def cmd_pluglab(cfg: RunConfig) -> int:
    spec = _load_spec(cfg)
    plug = (gen_wilson_plug if spec.variant == "wilson" else gen_stream_plug)(spec)
    rep = check_plug_axioms(plug, seed=cfg.seed)
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    write_atomic(os.path.join(out, "axiom_report.json"), (rep.to_json() + "\n").encode())

    sigma = radial_entry_curve(spec.r_star + spec.delta_r, spec.trapped_entry_radius())
    study = limit_cycle_study(plug, sigma, tube_radius=0.125)

    grid = Grid3(cfg.n, cfg.L)
    ambient = VectorField.from_components(grid, 0.0, 0.0, 1.0)
    pl = Placement(center=np.full(3, cfg.L / 2),
                   half_extent=np.array([spec.r_out, spec.r_out, 1.5]))
    Xg = insert_plug(ambient, plug, pl)
    emb = EmbeddedPlug(plug, pl, L=cfg.L)
    alpha = dec.euclidean_flat(Xg)
    B = _fit_bernoulli(Xg, alpha)
    sigma_amb = radial_entry_curve(spec.r_star + spec.delta_r,
                                   spec.trapped_entry_radius(),
                                   center=np.full(3, cfg.L / 2))
    flux = flux_decay_study(emb, sigma_amb, study.meta["t_sequence"], alpha, B,
                            ntau=32, n_reduced=128)
    for row, frow in zip(study.rows, flux.rows):
        row.flux_a, row.flux_b = frow.flux_a, frow.flux_b
    write_atomic(os.path.join(out, "chain_study.csv"), study.to_csv().encode())
    _write_json(os.path.join(out, "chain_study.json"), study.to_json())
    _report(out, "pluglab_report", {
        "config": cfg.to_json(),
        "axioms_ok": rep.ok(),
        "flat_bound_final": study.rows[-1].flat_bound if study.rows else None,
        "gamma_final": study.rows[-1].gamma_len if study.rows else None,
        "flux_b_first": study.rows[0].flux_b if study.rows else None,
        "flux_b_final": study.rows[-1].flux_b if study.rows else None,
        "files": ["axiom_report.json", "chain_study.csv", "chain_study.json"],
    })
    return EXIT_OK if rep.ok() else EXIT_VERIFY


def cmd_metric(cfg: RunConfig) -> int:
    out = cfg.out_dir
    alpha = read_vf3(os.path.join(out, "alpha.vf3"))
    X = read_vf3(os.path.join(out, "field.vf3"))
    bpath = os.path.join(out, "bernoulli.vf3")
    B = read_vf3(bpath) if os.path.exists(bpath) else ScalarField0.constant(X.grid, 0.0)
    alpha = OneForm(alpha.grid, alpha.values)
    g = build_metric(alpha, X, volume_compatible=True)
    _write_metric(os.path.join(out, "metric.vf3"), g)
    _report(out, "metric_report", {
        "config": cfg.to_json(),
        **g.diagnostics,
        **verify_euler(g, X, B),
        "files": ["metric.vf3"],
    })
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    """Re-verify a certificate directory written by certify."""
    out = cfg.out_dir
    with open(os.path.join(out, "certificate.json")) as f:
        cert_json = json.load(f)
    X = read_vf3(os.path.join(out, "field.vf3"))
    prob = assemble(cert_json["mode"], X, eta=cfg.eta)
    if cert_json["kind"] == "primal":
        alpha = read_vf3(os.path.join(out, "alpha.vf3"))
        alpha = OneForm(alpha.grid, alpha.values)
        bpath = os.path.join(out, "bernoulli.vf3")
        B = read_vf3(bpath) if os.path.exists(bpath) else None
        cert = PrimalCertificate(mode=cert_json["mode"], alpha=alpha, B=B,
                                 T=cert_json.get("T"))
        ok, rep = verify_primal(cert, prob)
    else:
        mu = read_vf3(os.path.join(out, "dual_mu.vf3"))
        lam = read_vf3(os.path.join(out, "dual_lambda.vf3"))
        cert = DualCertificate(mode=cert_json["mode"],
                               mu_weights=mu.values.ravel(),
                               lam=lam.values.reshape(3, -1).ravel())
        ok, rep = verify_dual(cert, prob, eps_dual=cfg.eps_dual,
                              eps_cycle=cfg.eps_cycle)
    _report(out, "verify_report", {"config": cfg.to_json(), "verified": bool(ok),
                                   "stored_report": cert_json.get("report"),
                                   "recomputed": rep})
    return EXIT_OK if ok else EXIT_VERIFY


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eulerize",
                                description="Steady-Euler-flow certification on the flat 3-torus")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n", type=int, default=16)
        sp.add_argument("--L", type=float, default=2.0 * np.pi)
        sp.add_argument("--out", dest="out_dir", default=".")
        sp.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("gen", help="generate a field or a plug")
    common(g)
    g.add_argument("--gen", dest="generator", default=None,
                   help="abc | vertical | plugged-wilson | plugged-stream")
    g.add_argument("--params", dest="gen_params", type=float, nargs="*", default=[])
    g.add_argument("--plug", dest="plug_variant", choices=["wilson", "stream"])
    g.add_argument("--plug-spec", dest="plug_spec_path")
    g.add_argument("--check", action="store_true",
                   help="plug axioms are always checked; kept for symmetry")

    c = sub.add_parser("certify", help="assemble + solve + verify")
    common(c)
    c.add_argument("--gen", dest="generator", default=None)
    c.add_argument("--params", dest="gen_params", type=float, nargs="*", default=[])
    c.add_argument("--field", dest="field_path", default=None)
    c.add_argument("--mode", default="adapted",
                   choices=["adapted", "geodesible", "reeb", "vorticity-pair"])
    c.add_argument("--eta", type=float, default=1e-6)
    c.add_argument("--eps-dual", dest="eps_dual", type=float, default=1e-6)
    c.add_argument("--eps-cycle", dest="eps_cycle", type=float, default=1e-5)
    c.add_argument("--budget", type=float, default=None)

    pl = sub.add_parser("pluglab", help="axiom check + chain and flux studies")
    common(pl)
    pl.add_argument("--plug", dest="plug_variant", choices=["wilson", "stream"],
                    default="wilson")
    pl.add_argument("--plug-spec", dest="plug_spec_path")

    m = sub.add_parser("metric", help="build + verify the metric from alpha.vf3")
    common(m)

    v = sub.add_parser("verify", help="re-verify a certificate directory")
    common(v)
    v.add_argument("--eta", type=float, default=1e-6)
    v.add_argument("--eps-dual", dest="eps_dual", type=float, default=1e-6)
    v.add_argument("--eps-cycle", dest="eps_cycle", type=float, default=1e-5)

    return p


def main(argv=None) -> int:
    threads = os.environ.get("EULERIZE_THREADS")
    if threads:
        try:
            import numba
            numba.set_num_threads(max(1, int(threads)))
        except (ImportError, ValueError):
            pass
    args = _build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k != "check"})
    handlers = {"gen": cmd_gen, "certify": cmd_certify, "pluglab": cmd_pluglab,
                "metric": cmd_metric, "verify": cmd_verify}
    try:
        return handlers[cfg.command](cfg)
    except ToolError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    except FileNotFoundError as e:
        sys.stderr.write(f"error: missing file: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
