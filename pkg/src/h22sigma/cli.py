"""``h22sigma {verify,exact,sample,bounds}``: experiment driver.

Exit status: 0 success, 2 invalid configuration, 3 identity failure,
4 measured correlations above the proven envelope.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds, identities, mcmc
from .config import ConfigError, ExperimentConfig, load
from .exact import MAX_SITES, Observable, expectation, partition_function, tail_estimate
from .model import PinningMode

log = logging.getLogger("h22sigma")

EXIT_OK, EXIT_CONFIG, EXIT_IDENTITY, EXIT_ENVELOPE = 0, 2, 3, 4


def _meta(cfg: ExperimentConfig | None, **extra) -> dict:
    meta = {"artifact": "h22sigma", "version": __version__}
    if cfg is not None:
        meta.update(config_hash=cfg.hash(), seed=cfg.run.seed)
    meta.update(extra)
    return meta


def _header(meta: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n"


def write_csv(path: Path, meta: dict, columns: list[str], rows) -> None:
    buf = io.StringIO()
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    path.write_text(buf.getvalue())


def write_json(path: Path, meta: dict, payload: dict) -> None:
    path.write_text(json.dumps({"_meta": meta, **payload}, indent=2, sort_keys=True) + "\n")


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------

def cmd_verify(cfg: ExperimentConfig, quick: bool = False, stream=None) -> tuple[int, list]:
    """Run the identity suite; exit status 3 if anything fails."""
    stream = sys.stdout if stream is None else stream
    results = identities.run_suite(cfg.run.seed, cfg.params(), quick=quick)
    for r in results:
        print(r.line(), file=stream)
    ok = all(r.passed for r in results)
    print(f"identity suite: {'all passed' if ok else 'FAILURES'}", file=stream)
    if "json" in cfg.output.formats:
        write_json(_outdir(cfg) / "verify.json", _meta(cfg), {
            "passed": ok,
            "identities": [{k: v for k, v in r.as_dict().items() if k != "seconds"} for r in results],
        })
    return (EXIT_OK if ok else EXIT_IDENTITY), results


BOUNDS_COLUMNS = ["beta", "I_beta", "r", "beta_c", "localized_flag"]


def bounds_table(d: int, betas) -> list[tuple]:
    bc = bounds.beta_c(d)
    return [(b, bounds.I_beta(b), bounds.rate(d, b), bc, int(bounds.rate(d, b) < 1)) for b in betas]


def cmd_bounds(d: int, betas, out: Path | None = None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    rows = bounds_table(d, betas)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUNDS_COLUMNS)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    text = _header(_meta(None, d=d)) + buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    else:
        stream.write(text)
    return EXIT_OK


def exact_observables(params) -> list[Observable]:
    pinned = [int(j) for j in np.flatnonzero(params.eps > 0)]
    obs = [Observable.G(x, y) for x in pinned for y in pinned if x <= y]
    return obs + [Observable.O(x) for x in params.lattice.sites()]


def cmd_exact(cfg: ExperimentConfig, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    params = cfg.params()
    if params.n_sites > MAX_SITES:
        print(f"refusing exact quadrature: {params.n_sites} sites exceeds the limit of {MAX_SITES} "
              f"(cost grows like nodes^sites); use `sample` instead", file=sys.stderr)
        return EXIT_CONFIG
    spec = cfg.quadrature_spec(params)
    z = partition_function(params, spec)
    z_fine = partition_function(params, spec.refined())
    out = _outdir(cfg)
    meta = _meta(cfg)
    write_json(out / "z.json", meta, {
        "Z": z,
        "Z_minus_1": z - 1.0,
        "tail_estimate": tail_estimate(params, spec),
        "panel_doubling_delta": abs(z_fine - z),
        "quadrature": {"T": spec.T, "panels": spec.panels, "order": spec.order},
    })
    rows = []
    for o in exact_observables(params):
        rows.append((o.label, o.x, o.y if o.y is not None else "", expectation(params, o, spec)))
    write_csv(out / "expectations.csv", meta, ["observable", "x", "y", "value"], rows)
    print(f"Z = {z!r} (|Z-1| = {abs(z - 1):.3e}); wrote {out}/z.json, {out}/expectations.csv", file=stream)
    return EXIT_OK


def sample_observables(params) -> tuple[int, list[Observable]]:
    """Reference site and observables measured against it."""
    lat = params.lattice
    if params.pinning.mode is PinningMode.SINGLE:
        x0 = params.pinning.sites[0]
        return x0, [Observable.O(y) for y in lat.sites()]
    x0 = params.pinning.sites[0] if params.pinning.mode is PinningMode.TWO_POINT else 0
    return x0, [Observable.G(x0, y) for y in lat.sites()]


def envelope_for(cfg: ExperimentConfig, params, distances) -> tuple[dict | None, str]:
    """Bound at each distance, or ``None`` with the reason when beta is not below beta_c."""
    bp = bounds.BoundParams(len(cfg.model.extents), params.beta)
    try:
        bp.check_localized()
    except bounds.EnvelopeNotValid as exc:
        return None, str(exc)
    if params.pinning.mode is PinningMode.SINGLE:
        return {r: bounds.theorem2_envelope(bp, r) for r in distances}, "theorem2"
    pinned = params.eps[params.eps > 0]
    if params.pinning.mode is PinningMode.TWO_POINT:
        ex, ey = params.pinning.values
    else:
        ex = ey = float(pinned[0])
    return {r: bounds.theorem1_envelope(bp, ex, ey, r) for r in distances}, "theorem1"


def cmd_sample(cfg: ExperimentConfig, stream=None) -> tuple[int, dict]:
    stream = sys.stdout if stream is None else stream
    params = cfg.params()
    lat = params.lattice
    x0, obs = sample_observables(params)
    r = cfg.run
    results = mcmc.estimate_many(
        params, obs, r.sweeps, r.burn_in, r.chains, r.seed,
        proposal_sigma=r.proposal_sigma, tune=r.tune, workers=r.workers, allow_unpinned=True,
    )
    out = _outdir(cfg)
    meta = _meta(cfg)
    rows = []
    for o, res in zip(obs, results):
        y = o.y if o.kind == "G" else o.x
        rows.append((x0, y, lat.distance(x0, y), res.mean, res.stderr))
    write_csv(out / "correlations.csv", meta, ["x", "y", "distance", "mean", "stderr"], rows)

    distances = sorted({row[2] for row in rows})
    env, status = envelope_for(cfg, params, distances)
    points = [(row[2], row[3], row[4]) for row in rows]
    fit = bounds.fit_decay_rate(points)
    payload = {
        "rate": fit.rate,
        "rate_stderr": fit.rate_stderr,
        "intercept": fit.intercept,
        "points_excluded": fit.n_excluded,
        "acceptance_rate": results[0].acceptance_rate,
        "observable": "O_x" if params.pinning.mode is PinningMode.SINGLE else "G_xy",
        "reference_site": x0,
    }
    code = EXIT_OK
    if env is None:
        payload.update(envelope="refused", envelope_reason=status, bound_rate=None, passed=None)
        print(f"envelope refused: {status}", file=stream)
    else:
        write_csv(out / "envelope.csv", meta, ["distance", "bound"], [(k, env[k]) for k in distances])
        violations = [row[1] for row in rows if row[3] - 3.0 * row[4] > env[row[2]]]
        rate_r = bounds.rate(len(cfg.model.extents), params.beta)
        payload.update(envelope=status, bound_rate=-math.log(rate_r), passed=not violations, violations=violations)
        if violations:
            code = EXIT_ENVELOPE
    write_json(out / "fit.json", meta, payload)
    print(f"fitted rate {fit.rate:.4f} +- {fit.rate_stderr:.4f}; envelope {payload['envelope']}; "
          f"pass={payload['passed']}; wrote {out}/", file=stream)
    return code, payload


# ---------------------------------------------------------------------------

def _parse_betas(text: str) -> list[float]:
    return [float(v) for v in text.replace(" ", "").split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="h22sigma", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("-c", "--config", help="TOML experiment file")
        sp.add_argument("-s", "--set", action="append", default=[], metavar="TABLE.KEY=VALUE",
                        help="override one config key (repeatable)")
        return sp

    v = with_config(sub.add_parser("verify", help="run the exact identity suite"))
    v.add_argument("--quick", action="store_true", help="fewer random instances")
    with_config(sub.add_parser("exact", help="quadrature Z and expectations on <= 4 sites"))
    with_config(sub.add_parser("sample", help="Metropolis estimates of the decay observables"))
    b = sub.add_parser("bounds", help="I_beta, rate and beta_c table")
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--beta", type=_parse_betas, required=True, help="comma-separated list")
    b.add_argument("--out", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "bounds":
            if args.d < 1 or any(b <= 0 for b in args.beta):
                raise ConfigError("need d >= 1 and every beta > 0")
            return cmd_bounds(args.d, args.beta, args.out)
        cfg = load(args.config, args.set)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "verify":
        return cmd_verify(cfg, quick=args.quick)[0]
    if args.command == "exact":
        return cmd_exact(cfg)
    return cmd_sample(cfg)[0]


if __name__ == "__main__":
    sys.exit(main())
