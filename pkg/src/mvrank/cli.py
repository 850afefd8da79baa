"""Command-line interface.

Subcommands: ``simulate``, ``mvcurve``, ``band``, ``arank-fit``,
``arank-score`` and ``oracle``. Every command is a pure function of its
input files, flags and ``--seed``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .arank import ARankConfig, ARankModel, fit_arank
from .bootstrap import DEFAULT_GRID, bootstrap_band
from .core import (Box, DataError, Dataset, DomainError, NumericalError, RandomSource,
                   StepCurve, fmt)
from .kde import bandwidth_for
from .mvcurve import (ScoreSample, empirical_mv_curve, mv_star_gaussian_1d,
                      mv_star_gaussian_diag)
from .scoring import (GaussianMixtureDensity, GaussianParams, load_json_arg, mixture_from_spec,
                      parse_scorer, score_batch, simulate_mixture)
from .volume import DEFAULT_MC_SAMPLES, VolumeEstimator, bounding_box

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

# Independent sub-streams of the run seed.
STREAM_DATA, STREAM_MC, STREAM_BOOT, STREAM_REF = 0, 1, 2, 3


@dataclass
class RunConfig:
    seed: int = 0
    mc_samples: int = DEFAULT_MC_SAMPLES
    depth: int = 5
    epsilon: float = 0.05
    eta: float = 0.1
    delta: float = 0.05
    tau: float | None = None
    bandwidth: float | None = None
    grid: int = DEFAULT_GRID
    reps: int | None = None
    rademacher_c: float = 0.0
    padding: float = 0.05
    box: Box | None = None
    naive: bool = False
    strict: bool = False

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        box = None
        if getattr(args, "box", None):
            box = Box.from_dict(load_json_arg(args.box))
        return cls(args.seed, args.mc_samples, args.depth, args.epsilon, args.eta, args.delta,
                   args.tau, args.bandwidth, args.grid, args.reps, args.rademacher_c,
                   args.padding, box, args.naive, args.strict)


# ---------------------------------------------------------------------------
# I/O helpers


def read_data_csv(path: str) -> Dataset:
    """Read a headed CSV of floats; errors name the offending line."""
    try:
        text = Path(path).read_text() if path != "-" else sys.stdin.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataError(f"{path}: empty file")
    width = len(rows[0])
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        try:
            out.append([float(c) for c in row])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(out))


def write_text(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _estimator(cfg: RunConfig, data: Dataset) -> VolumeEstimator:
    box = cfg.box or bounding_box(data, cfg.padding)
    return VolumeEstimator(box, cfg.mc_samples, RandomSource(cfg.seed).child(STREAM_MC))


def _require_scorer(args, data: Dataset):
    if not args.scorer:
        raise DataError("--scorer is required")
    scorer = parse_scorer(args.scorer)
    if scorer.d != data.d:
        raise DataError(f"scorer dimension {scorer.d} does not match data dimension {data.d}")
    return scorer


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args, cfg: RunConfig) -> None:
    if args.n < 1:
        raise DomainError("n must be at least 1")
    params = mixture_from_spec(load_json_arg(args.mixture))
    data = simulate_mixture(params, args.n, RandomSource(cfg.seed).child(STREAM_DATA))
    header = [f"x{i + 1}" for i in range(data.d)]
    write_text(rows_to_csv(header, [[float(v) for v in row] for row in data.points]), args.out)


def cmd_mvcurve(args, cfg: RunConfig) -> None:
    data = read_data_csv(args.data)
    scorer = _require_scorer(args, data)
    est = _estimator(cfg, data)
    curve = empirical_mv_curve(ScoreSample(score_batch(scorer, data)), scorer, est)
    write_text(curve.to_csv(), args.out)


def cmd_band(args, cfg: RunConfig) -> None:
    data = read_data_csv(args.data)
    scorer = _require_scorer(args, data)
    est = _estimator(cfg, data)
    sample = ScoreSample(score_batch(scorer, data))
    h = bandwidth_for(sample.sorted_scores, cfg.bandwidth)
    band = bootstrap_band(sample, scorer, est, h, cfg.epsilon, cfg.eta, cfg.reps, cfg.grid,
                          RandomSource(cfg.seed).child(STREAM_BOOT), naive=cfg.naive)
    center = band.center(band.grid)
    rows = [[float(a), float(c), float(lo), float(hi)] for a, c, lo, hi in
            zip(band.grid, center, band.lower(band.grid), band.upper(band.grid))]
    write_text(rows_to_csv(["alpha", "center", "lower", "upper"], rows), args.out)
    summary = band.summary(cfg.seed)
    summary["bandwidth"] = h
    summary["naive"] = cfg.naive
    text = json.dumps(summary, sort_keys=True, indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    elif args.out and args.out != "-":
        Path(args.out).with_suffix(".json").write_text(text)
    else:
        sys.stderr.write(text)


def cmd_arank_fit(args, cfg: RunConfig) -> None:
    data = read_data_csv(args.data)
    acfg = ARankConfig(depth=cfg.depth, epsilon=cfg.epsilon, delta=cfg.delta,
                       rademacher_c=cfg.rademacher_c, tau=cfg.tau,
                       box=cfg.box, padding=cfg.padding, strict=cfg.strict)
    model = fit_arank(data, acfg)
    write_text(json.dumps(model.to_dict(), sort_keys=True) + "\n", args.out)


def cmd_arank_score(args, cfg: RunConfig) -> None:
    data = read_data_csv(args.data)
    try:
        model = ARankModel.from_json(Path(args.model).read_text())
    except OSError as exc:
        raise DataError(f"cannot read model: {exc}") from exc
    if model.d != data.d:
        raise DataError(f"model dimension {model.d} does not match data dimension {data.d}")
    scores = model.score(data.points)
    dens = model.density_cdf(data.points)
    rows = [[int(s), float(c)] for s, c in zip(scores, dens)]
    write_text(rows_to_csv(["score", "density_cdf"], rows), args.out)


def oracle_curve(family, cfg: RunConfig, n_ref: int) -> StepCurve:
    """MV* sampled on the grid ``g / G`` as a step curve."""
    alphas = np.arange(cfg.grid) / cfg.grid
    if isinstance(family, str):
        family = {"family": family}
    name = family.get("family")
    params = family.get("params", {})
    if name == "gaussian-1d":
        vals = mv_star_gaussian_1d(alphas, float(params.get("sigma", 1.0)))
    elif name == "gaussian-diag":
        gp = GaussianParams(params.get("mean", [0.0, 0.0]),
                            params.get("diag_cov", [1.0] * len(params.get("mean", [0.0, 0.0]))))
        vals = np.array([mv_star_gaussian_diag(a, gp) for a in alphas])
    elif name == "mixture":
        mix = mixture_from_spec(params or "gm2d")
        root = RandomSource(cfg.seed)
        ref = simulate_mixture(mix, n_ref, root.child(STREAM_REF))
        scorer = GaussianMixtureDensity(mix)
        est = _estimator(cfg, ref)
        curve = empirical_mv_curve(ScoreSample(score_batch(scorer, ref)), scorer, est)
        vals = curve(alphas)
    else:
        raise DataError(f"unsupported oracle family {name!r}")
    return StepCurve(np.arange(cfg.grid + 1) / cfg.grid, vals)


def cmd_oracle(args, cfg: RunConfig) -> None:
    write_text(oracle_curve(load_json_arg(args.family), cfg, args.n_ref).to_csv(), args.out)


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES,
                   help="Monte-Carlo points for volume estimation")
    p.add_argument("--depth", type=int, default=5, help="dyadic histogram depth")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--reps", type=int, default=None, help="bootstrap replicates (default n)")
    p.add_argument("--rademacher-c", type=float, default=0.0)
    p.add_argument("--padding", type=float, default=0.05, help="bounding-box padding fraction")
    p.add_argument("--box", default=None, help="reference box as JSON {lower, upper}")
    p.add_argument("--scorer", default=None, help="scorer JSON, inline or file path")
    p.add_argument("--naive", action="store_true", help="unsmoothed bootstrap")
    p.add_argument("--strict", action="store_true",
                   help="reject data points outside the histogram box")
    p.add_argument("--out", "-o", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvrank", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"mvrank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a Gaussian mixture to CSV")
    _common(p)
    p.add_argument("--mixture", default="gm2d", help="preset name or mixture JSON")
    p.add_argument("--n", type=int, default=500)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mvcurve", help="empirical MV curve of a scorer")
    _common(p)
    p.add_argument("data")
    p.set_defaults(func=cmd_mvcurve)

    p = sub.add_parser("band", help="smoothed-bootstrap confidence band")
    _common(p)
    p.add_argument("data")
    p.add_argument("--summary", default=None, help="path of the JSON summary")
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("arank-fit", help="learn an A-Rank scoring function")
    _common(p)
    p.add_argument("data")
    p.set_defaults(func=cmd_arank_fit)

    p = sub.add_parser("arank-score", help="score points with a fitted model")
    _common(p)
    p.add_argument("data")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_arank_score)

    p = sub.add_parser("oracle", help="optimal MV curve of a known distribution")
    _common(p)
    p.add_argument("--family", required=True,
                   help="gaussian-1d, gaussian-diag, mixture, or JSON {family, params}")
    p.add_argument("--n-ref", type=int, default=50_000)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        args.func(args, cfg)
    except (DataError, json.JSONDecodeError, OSError) as exc:
        print(f"mvrank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DomainError as exc:
        print(f"mvrank: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError) as exc:
        print(f"mvrank: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
