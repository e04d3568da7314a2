"""Batch command-line runs with reproducible file outputs.

Subcommands: density, passage, scan, brownian, oracle. Data files are
CSV with 17 significant digits and LF line endings; structured reports
are JSON. Identical flags and seed give byte-identical data files for
any --threads value; wall-clock timestamps appear only in the manifest.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .brownian import PassageTimeout, bm_passage_ensemble, correspondence_map
from .ensemble import (
    EnsembleSpec,
    RunAborted,
    mc_photon_density,
    run_ensemble,
    times_by_threshold,
)
from .kernels import quantum_emitted_curve, quantum_photon_flux, quantum_flux_profile
from .model import CondensateProfile, ConfigError, ModelConfig, load_config
from . import stats

_ENV_SEED = "SRPASS_SEED"


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written atomically at the end of every run."""

    command: str
    config: dict
    seed: int
    version: str
    started: str
    finished: str
    outputs: list


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_csv(path: str, header, rows, comment: str | None = None) -> None:
    lines = []
    if comment is not None:
        lines.append("# " + comment)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(row))
    _write_text(path, "\n".join(lines) + "\n")


def _write_json(path: str, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _atomic_json(path: str, obj) -> None:
    tmp = path + ".tmp"
    _write_json(tmp, obj)
    os.replace(tmp, path)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _parse_floats(text: str, flag: str):
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated numbers: {exc}") from None
    if not values:
        raise ConfigError(f"{flag} must list at least one number")
    return values


def _resolve_config(args) -> ModelConfig:
    cfg = load_config(args.config) if args.config else ModelConfig()
    seed = None
    if args.seed is not None:
        seed = args.seed
    elif os.environ.get(_ENV_SEED):
        raw = os.environ[_ENV_SEED]
        try:
            seed = int(raw, 10)
        except ValueError:
            raise ConfigError(f"{_ENV_SEED} must be a decimal integer, got {raw!r}") from None
    if seed is not None:
        cfg = cfg.replace(rng_seed=seed)
    return cfg


def _fit_entry(kind: str, method: str, fitter, hist, pdf_of, n_samples: int, n_excluded: int):
    """One fit report, or the recorded failure if the data cannot support it."""
    try:
        params = fitter()
        quality = stats.fit_quality(hist, lambda t: pdf_of(t, params))
        report = stats.fit_report(kind, method, params, quality, n_samples, n_excluded)
        return params, report
    except (stats.FitError, ValueError) as exc:
        return None, {"distribution": kind, "method": method, "error": str(exc)}


def _analyze_threshold(times: np.ndarray, bins):
    """All three fits plus goodness-of-fit for one threshold's samples."""
    out: dict = {}
    try:
        finite, n_excluded = stats.clean_times(times)
        hist = stats.histogram(finite, bins=bins)
    except (stats.FitError, ValueError) as exc:
        return {"error": str(exc)}, None
    n = finite.size
    mle, out["ig_mle"] = _fit_entry(
        "inverse_gaussian", "mle", lambda: stats.fit_ig_mle(times), hist, stats.ig_pdf, n, n_excluded
    )
    lsq, out["ig_lsq"] = _fit_entry(
        "inverse_gaussian", "lsq", lambda: stats.fit_ig_lsq(hist), hist, stats.ig_pdf, n, n_excluded
    )
    _, out["gumbel_lsq"] = _fit_entry(
        "gumbel", "lsq", lambda: stats.fit_gumbel_lsq(hist), hist, stats.gumbel_pdf, n, n_excluded
    )
    if mle is not None and lsq is not None:
        out["mle_lsq_discrepancy"] = stats.cross_check_ig(mle, lsq)
    if lsq is not None:
        out["ks_ig_lsq"] = stats.ks_statistic(finite, lambda t: stats.ig_cdf(t, lsq))
    return out, hist


def cmd_density(cfg: ModelConfig, args) -> list:
    profile = CondensateProfile.thomas_fermi(cfg)
    avg = mc_photon_density(cfg, args.n_traj, args.tau, args.threads, profile)
    oracle = quantum_flux_profile(args.tau, cfg, profile)
    path = f"{args.out}_density.csv"
    rows = (
        (_fmt(x), _fmt(m), _fmt(o))
        for x, m, o in zip(avg.xi, avg.mean_flux, oracle)
    )
    _write_csv(path, ("xi", "mc_flux", "oracle_flux"), rows)
    return [path]


def cmd_passage(cfg: ModelConfig, args) -> list:
    thresholds = _parse_floats(args.thresholds, "--thresholds")
    spec = EnsembleSpec(cfg=cfg, n_traj=args.n_traj, thresholds=tuple(thresholds))
    samples = run_ensemble(spec, args.threads)

    samples_path = f"{args.out}_samples.csv"
    rows = (
        (str(s.trajectory_index), _fmt(s.threshold), "" if s.time is None else _fmt(s.time))
        for s in samples
    )
    _write_csv(samples_path, ("trajectory_index", "threshold", "passage_time"), rows)

    by_thr = times_by_threshold(samples)
    fits: dict = {}
    hist_rows = []
    for thr in spec.thresholds:
        report, hist = _analyze_threshold(by_thr[thr], args.bins)
        fits[_fmt(thr)] = report
        if hist is not None:
            for lo, hi, c, d in zip(
                hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts, hist.density
            ):
                hist_rows.append((_fmt(thr), _fmt(lo), _fmt(hi), str(int(c)), _fmt(d)))
    fits_path = f"{args.out}_fits.json"
    _write_json(fits_path, {"thresholds": fits})
    hist_path = f"{args.out}_hist.csv"
    _write_csv(hist_path, ("threshold", "bin_lo", "bin_hi", "count", "density"), hist_rows)
    return [samples_path, fits_path, hist_path]


def _scan_row(times: np.ndarray, gamma: float):
    finite = times[np.isfinite(times)]
    row = {"mu": np.nan, "lam": np.nan, "s": np.nan, "regime": "unknown"}
    if finite.size == 0:
        return row, None
    row["regime"] = stats.classify_regime(float(finite.mean()))
    scaled = stats.scaled_histogram(finite, gamma)
    try:
        params = stats.fit_ig_lsq(stats.histogram(finite))
        row.update(mu=params.mu, lam=params.lam, s=stats.s_ratio(params))
    except (stats.FitError, ValueError):
        pass
    return row, scaled


def cmd_scan(cfg: ModelConfig, args) -> list:
    gammas = _parse_floats(args.gammas, "--gammas")
    thresholds = sorted(_parse_floats(args.thresholds, "--thresholds"))
    lo, hi = args.gamma_low, args.gamma_high
    if not 0 < lo < hi:
        raise ConfigError(f"need 0 < --gamma-low < --gamma-high, got {lo}, {hi}")
    for g in gammas:
        if not lo <= g <= hi:
            raise ConfigError(f"scan gamma {g} outside the reference window [{lo}, {hi}]")

    def ensemble_times(gamma):
        spec = EnsembleSpec(
            cfg=cfg.replace(gamma=gamma), n_traj=args.n_traj, thresholds=tuple(thresholds)
        )
        return times_by_threshold(run_ensemble(spec, args.threads))

    ref_scaled = {}
    for ref_g in (lo, hi):
        by_thr = ensemble_times(ref_g)
        for thr in thresholds:
            finite = by_thr[thr][np.isfinite(by_thr[thr])]
            ref_scaled[(ref_g, thr)] = (
                stats.scaled_histogram(finite, ref_g) if finite.size else None
            )

    rows = []
    s_points: dict = {"weak": {}, "strong": {}}
    for g in gammas:
        by_thr = ensemble_times(g)
        for thr in thresholds:
            row, scaled = _scan_row(by_thr[thr], g)
            overlaps = {}
            for tag, ref_g in (("overlap_low", lo), ("overlap_high", hi)):
                ref = ref_scaled[(ref_g, thr)]
                overlaps[tag] = (
                    stats.overlap(scaled, ref) if scaled is not None and ref is not None else np.nan
                )
            rows.append(
                (
                    _fmt(g), _fmt(thr), _fmt(row["mu"]), _fmt(row["lam"]), _fmt(row["s"]),
                    _fmt(overlaps["overlap_low"]), _fmt(overlaps["overlap_high"]), row["regime"],
                )
            )
            if row["regime"] in s_points and np.isfinite(row["s"]):
                s_points[row["regime"]].setdefault(g, []).append(row["s"])

    scan_path = f"{args.out}_scan.csv"
    _write_csv(
        scan_path,
        ("gamma", "n_th", "mu", "lambda", "s", "overlap_low", "overlap_high", "regime"),
        rows,
    )

    summary = {}
    for regime, per_gamma in s_points.items():
        if len(per_gamma) >= 2:
            pts = [(g, float(np.mean(vals))) for g, vals in sorted(per_gamma.items())]
            slope, intercept = stats.fit_s_vs_gamma(pts, regime)
            summary[regime] = {
                "slope": slope,
                "intercept": intercept,
                "points": [{"gamma": g, "s_mean": s} for g, s in pts],
            }
    fit_path = f"{args.out}_scanfit.json"
    _write_json(fit_path, summary)
    return [scan_path, fit_path]


def cmd_brownian(cfg: ModelConfig, args) -> list:
    spec = correspondence_map(args.mean_t, args.s)
    times = bm_passage_ensemble(spec, args.n_samples, cfg.rng_seed)

    csv_path = f"{args.out}_bm.csv"
    header_note = json.dumps(
        {
            "nu": spec.nu, "sigma": spec.sigma, "alpha": spec.alpha, "dt": spec.dt,
            "n_samples": int(args.n_samples), "seed": cfg.rng_seed,
        },
        sort_keys=True,
    )
    _write_csv(
        csv_path,
        ("sample_index", "time"),
        ((str(i), _fmt(t)) for i, t in enumerate(times)),
        comment=header_note,
    )

    report: dict = {"spec": json.loads(header_note)}
    implied = stats.IGParams(mu=args.mean_t, lam=args.s * args.mean_t**2)
    if times.size >= 2 and np.ptp(times) > 0:
        report["ks_vs_implied_ig"] = stats.ks_statistic(
            times, lambda t: stats.ig_cdf(t, implied)
        )
        fit_block, _ = _analyze_threshold(times, None)
        report["fits"] = fit_block
    else:
        print("warning: too few samples to fit; wrote samples only", file=sys.stderr)
        report["warning"] = "fit skipped: need at least two distinct samples"
    fit_path = f"{args.out}_bmfit.json"
    _write_json(fit_path, report)
    return [csv_path, fit_path]


def cmd_oracle(cfg: ModelConfig, args) -> list:
    taus = _parse_floats(args.taus, "--taus")
    if any(t < 0 for t in taus):
        raise ConfigError("--taus must be nonnegative")
    profile = CondensateProfile.thomas_fermi(cfg)
    emitted = quantum_emitted_curve(np.asarray(taus), cfg, profile)
    rows = []
    for tau, n_em in zip(taus, emitted):
        flux = quantum_photon_flux(cfg.lambda_len, tau, cfg, profile)
        rows.append((_fmt(tau), _fmt(flux), _fmt(n_em)))
    path = f"{args.out}_oracle.csv"
    _write_csv(path, ("tau", "flux_end", "emitted"), rows)
    return [path]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="srpass",
        description="Superradiant passage-time simulations, fits, and oracles.",
    )
    p.add_argument("--config", help="JSON model configuration file")
    p.add_argument("--seed", type=int, help=f"master seed (overrides {_ENV_SEED} and config)")
    p.add_argument("--threads", type=int, default=os.cpu_count(), help="worker threads")
    p.add_argument("--out", default="srpass", help="output path prefix")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="Monte Carlo vs closed-form flux profile")
    d.add_argument("--tau", type=float, required=True)
    d.add_argument("--n-traj", type=int, default=2000)

    q = sub.add_parser("passage", help="passage-time ensemble, fits, histogram")
    q.add_argument("--thresholds", default="10")
    q.add_argument("--n-traj", type=int, default=10_000)
    q.add_argument("--bins", type=int, default=None)

    s = sub.add_parser("scan", help="coupling/threshold scan with overlaps and s ratios")
    s.add_argument("--gammas", required=True)
    s.add_argument("--thresholds", default="10")
    s.add_argument("--n-traj", type=int, default=2000)
    s.add_argument("--gamma-low", type=float, default=0.1)
    s.add_argument("--gamma-high", type=float, default=100.0)

    b = sub.add_parser("brownian", help="drifted-walk first-passage oracle")
    b.add_argument("--mean-t", type=float, required=True)
    b.add_argument("--s", type=float, required=True)
    b.add_argument("--n-samples", type=int, default=10_000)

    o = sub.add_parser("oracle", help="closed-form end-facet flux and photon count")
    o.add_argument("--taus", required=True)
    return p


_DISPATCH = {
    "density": cmd_density,
    "passage": cmd_passage,
    "scan": cmd_scan,
    "brownian": cmd_brownian,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = _now()
    try:
        cfg = _resolve_config(args)
        outputs = _DISPATCH[args.command](cfg, args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RunAborted, PassageTimeout, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest = RunManifest(
        command=args.command,
        config=cfg.as_dict(),
        seed=cfg.rng_seed,
        version=__version__,
        started=started,
        finished=_now(),
        outputs=outputs,
    )
    _atomic_json(f"{args.out}_manifest.json", asdict(manifest))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
