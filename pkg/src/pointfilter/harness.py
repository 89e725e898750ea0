"""Experiment runner: synthetic runs, clutter sweeps, file ingestion and report output."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .association import MultiTargetFilter
from .core import FilterConfig, MeasurementFrame
from .metrics import ospa
from .simulator import GroundTruthFrame, ScenarioSpec, Track, default_scenario, generate

CSV_FIELDS = ("time_step", "M", "N", "ospa", "loc", "card", "births", "deaths", "decays",
              "elapsed_ms")
DEFAULT_SWEEP = (10.0, 20.0, 30.0, 40.0, 50.0)


class InputFileError(ValueError):
    """A measurement or truth file could not be parsed."""


@dataclass
class FrameRecord:
    time_step: int
    M: int
    N: int
    ospa: float | None
    loc: float | None
    card: float | None
    births: int
    deaths: int
    decays: int
    elapsed_ms: float


@dataclass
class RunReport:
    records: list
    averages: dict
    config: dict
    seed: int
    estimates: list = field(default_factory=list, repr=False)
    model: tuple = field(default=None, repr=False)

    def ospa_values(self) -> np.ndarray:
        return np.array([r.ospa for r in self.records], dtype=float)


def _averages(records) -> dict:
    scored = [r for r in records if r.ospa is not None]
    if not scored:
        return {"ospa": None, "loc": None, "card": None}
    return {k: float(np.mean([getattr(r, k) for r in scored])) for k in ("ospa", "loc", "card")}


def _truth_lookup(truth) -> dict:
    return {gt.time_step: gt.positions for gt in truth}


def run_filter(frames, cfg: FilterConfig, truth=None, timing: bool = True, config_echo=None,
               seed=None, model=None, opt=None) -> RunReport:
    """Filter a stream of frames, scoring against ``truth`` (by time step) when given.

    With ``timing=False`` every ``elapsed_ms`` is recorded as 0 so that
    reports are byte-reproducible. ``model``/``opt`` warm-start the shared
    network; the final pair is kept on ``report.model``.
    """
    flt = MultiTargetFilter(cfg, model, opt, start_time=frames[0].time_step if frames else 0)
    gt = _truth_lookup(truth) if truth is not None else None
    records, est = [], []
    for frame in frames:
        t0 = time.perf_counter()
        outcome = flt.update(frame)
        elapsed = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        points = flt.estimates()
        est.append((frame.time_step, points))
        score = None
        if gt is not None:
            score = ospa(points, gt.get(frame.time_step, np.zeros((0, cfg.d))), cfg.ospa_p, cfg.ospa_c)
        records.append(FrameRecord(
            time_step=frame.time_step, M=len(flt.targets), N=len(frame),
            ospa=None if score is None else score.total,
            loc=None if score is None else score.loc,
            card=None if score is None else score.card,
            births=len(outcome.born), deaths=len(outcome.dead), decays=len(outcome.decayed),
            elapsed_ms=elapsed))
    echo = config_echo if config_echo is not None else {"filter": cfg.to_dict()}
    return RunReport(records, _averages(records), echo, cfg.rng_seed if seed is None else seed, est,
                     (flt.model, flt.opt))


def run_synthetic(cfg: FilterConfig, spec: ScenarioSpec, timing: bool = True, model=None,
                  opt=None) -> RunReport:
    """Generate the scenario and filter it. A fresh network is seeded by ``cfg.rng_seed``."""
    truth, frames = generate(spec)
    echo = {"filter": cfg.to_dict(), "scenario": spec.to_dict()}
    return run_filter(frames, cfg, truth, timing=timing, config_echo=echo, seed=spec.seed,
                      model=model, opt=opt)


def raw_measurement_ospa(spec: ScenarioSpec, p: float = 1.0, c: float = 100.0):
    """Per-frame OSPA obtained by reporting every measurement as a target."""
    truth, frames = generate(spec)
    return np.array([ospa(f.points, gt.positions, p, c).total for gt, f in zip(truth, frames)])


def derive_seed(base: int, *keys) -> int:
    ss = np.random.SeedSequence([int(base), *[int(round(k * 1000)) for k in keys]])
    return int(ss.generate_state(1)[0])


def run_sweep(cfg: FilterConfig, spec: ScenarioSpec, lambda_list=DEFAULT_SWEEP, repeats: int = 1,
              timing: bool = True) -> list:
    """One run per clutter rate (times ``repeats``), seeds derived from ``spec.seed``.

    Reports come back grouped by clutter rate, repeats innermost.
    """
    lambda_list = list(lambda_list)
    if not lambda_list:
        raise ValueError("lambda_list must not be empty")
    reports = []
    for lam in lambda_list:
        for rep in range(repeats):
            seed = derive_seed(spec.seed, lam, rep)
            run_spec = replace(spec, lambda_c=float(lam), seed=seed)
            reports.append(run_synthetic(replace(cfg, rng_seed=seed), run_spec, timing=timing))
    return reports


def sweep_summary(reports) -> dict:
    """Mean OSPA per clutter rate and the Spearman correlation of rate against OSPA."""
    lams = np.array([r.config["scenario"]["lambda_c"] for r in reports])
    vals = np.array([r.averages["ospa"] for r in reports])
    per_rate = {float(lam): float(vals[lams == lam].mean()) for lam in np.unique(lams)}
    rho = float(stats.spearmanr(lams, vals)[0]) if len(per_rate) > 1 else float("nan")
    return {"mean_ospa": per_rate, "spearman": rho}


def truncate_scenario(spec: ScenarioSpec, frames: int) -> ScenarioSpec:
    """Shorten a scenario to ``frames`` frames, clipping or dropping tracks."""
    if frames < 1:
        raise ValueError("frames must be >= 1")
    tracks = [replace(t, death_frame=min(t.death_frame, frames))
              for t in spec.tracks if t.birth_frame < frames]
    return replace(spec, num_frames=frames, tracks=tuple(tracks))


# --- files -----------------------------------------------------------------

def _read_rows(path, required):
    with open(path, newline="") as fh:
        text = fh.read()
    if not text.strip():
        return []
    reader = csv.reader(text.splitlines())
    header = [h.strip() for h in next(reader)]
    missing = [c for c in required if c not in header]
    if missing:
        raise InputFileError(f"{path}: line 1: header lacks columns {missing}")
    pos = [header.index(c) for c in required]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(header):
            raise InputFileError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        rows.append((lineno, [row[p].strip() for p in pos]))
    return rows


def _parse_int(path, lineno, s):
    try:
        return int(s)
    except ValueError:
        raise InputFileError(f"{path}: line {lineno}: time_step {s!r} is not an integer") from None


def _parse_float(path, lineno, s):
    try:
        v = float(s)
    except ValueError:
        raise InputFileError(f"{path}: line {lineno}: coordinate {s!r} is not a number") from None
    if not np.isfinite(v):
        raise InputFileError(f"{path}: line {lineno}: coordinate {s!r} is not finite")
    return v


def ingest_measurements(path) -> list:
    """Read ``time_step,x,y`` rows into consecutive frames; missing steps become empty frames."""
    grouped = {}
    for lineno, (t, x, y) in _read_rows(path, ("time_step", "x", "y")):
        grouped.setdefault(_parse_int(path, lineno, t), []).append(
            (_parse_float(path, lineno, x), _parse_float(path, lineno, y)))
    if not grouped:
        return []
    return [MeasurementFrame(np.array(grouped.get(t, [])).reshape(-1, 2), t, d=2)
            for t in range(min(grouped), max(grouped) + 1)]


def ingest_truth(path) -> list:
    """Read ``time_step,track_label,x,y`` rows into ground-truth frames."""
    grouped = {}
    for lineno, (t, label, x, y) in _read_rows(path, ("time_step", "track_label", "x", "y")):
        grouped.setdefault(_parse_int(path, lineno, t), []).append(
            (label, _parse_float(path, lineno, x), _parse_float(path, lineno, y)))
    if not grouped:
        return []
    out = []
    for t in range(min(grouped), max(grouped) + 1):
        rows = grouped.get(t, [])
        try:
            out.append(GroundTruthFrame(t, tuple(r[0] for r in rows),
                                        np.array([r[1:] for r in rows]).reshape(-1, 2)))
        except ValueError as exc:
            raise InputFileError(f"{path}: time step {t}: {exc}") from None
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_measurements(frames, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_step", "x", "y"])
        for f in frames:
            for x, y in f.points:
                w.writerow([f.time_step, repr(float(x)), repr(float(y))])


def write_truth(truth, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_step", "track_label", "x", "y"])
        for gt in truth:
            for label, (x, y) in zip(gt.labels, gt.positions):
                w.writerow([gt.time_step, label, repr(float(x)), repr(float(y))])


def write_estimates(report: RunReport, path) -> None:
    write_measurements([MeasurementFrame(p, t, d=2) for t, p in report.estimates], path)


def emit(report: RunReport, path, fmt: str = "csv") -> None:
    """Write per-frame records as CSV, or as JSONL followed by one summary line."""
    if fmt == "csv":
        lines = [",".join(CSV_FIELDS)]
        lines += [",".join(_fmt(getattr(r, k)) for k in CSV_FIELDS) for r in report.records]
    elif fmt == "jsonl":
        lines = [json.dumps(asdict(r)) for r in report.records]
        lines.append(json.dumps({"summary": {"averages": report.averages, "seed": report.seed,
                                             "frames": len(report.records),
                                             "config": report.config}}, sort_keys=True))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path, fmt: str = "csv"):
    """Parse a file written by :func:`emit`; returns ``(records, summary_or_None)``."""
    types = {f.name: f.type for f in fields(FrameRecord)}

    def convert(k, s):
        if s == "" or s is None:
            return None
        return int(s) if types[k] == "int" else float(s)

    if fmt == "csv":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return [FrameRecord(**{k: convert(k, row[k]) for k in CSV_FIELDS}) for row in rows], None
    if fmt == "jsonl":
        records, summary = [], None
        for line in Path(path).read_text().splitlines():
            obj = json.loads(line)
            if "summary" in obj:
                summary = obj["summary"]
            else:
                records.append(FrameRecord(**obj))
        return records, summary
    raise ValueError(f"unknown report format {fmt!r}")


def evaluate_files(truth_path, est_path, p: float = 1.0, c: float = 100.0) -> RunReport:
    """Score an estimate file against a truth file over the union of their time steps.

    In the resulting records ``M`` counts estimated points and ``N`` truth points.
    """
    truth = {gt.time_step: gt.positions for gt in ingest_truth(truth_path)}
    est = {f.time_step: f.points for f in ingest_measurements(est_path)}
    steps = sorted(set(truth) | set(est))
    records = []
    for t in steps:
        X = est.get(t, np.zeros((0, 2)))
        Y = truth.get(t, np.zeros((0, 2)))
        r = ospa(X, Y, p, c)
        records.append(FrameRecord(t, len(X), len(Y), r.total, r.loc, r.card, 0, 0, 0, 0.0))
    return RunReport(records, _averages(records), {"ospa_p": p, "ospa_c": c}, 0)


def load_config(path=None):
    """Read a JSON config with optional ``filter`` and ``scenario`` sections.

    Scenario keys override :func:`default_scenario`; filter keys override
    :class:`FilterConfig` defaults.
    """
    data = json.loads(Path(path).read_text()) if path else {}
    unknown = set(data) - {"filter", "scenario"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    cfg = FilterConfig.from_dict(data.get("filter", {}))
    base = default_scenario().to_dict()
    scen = data.get("scenario", {})
    base.update(scen)
    if "tracks" in scen:
        base["tracks"] = tuple(Track(**t) for t in scen["tracks"])
    return cfg, ScenarioSpec.from_dict(base)
