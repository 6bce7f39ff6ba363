"""Monte-Carlo comparison of the two reduction approaches.

Each trial draws one (input, switching) pair from its own seeded stream,
simulates the full switched model and both reduced models on it, and
scores the reduced outputs with the best fit rate. Trials may run on a
thread pool; results are merged in trial order so outputs do not depend
on the thread count.
"""
import csv
import io
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discretize import build_switched_model
from .errors import UndefinedBFRError
from .mm_ls import HORIZON_TOL
from .pipelines import approach_one, approach_two
from .simulate import UNIFORM, bfr, horizon_sequence, simulate_ls
from .systems import SampledDataSystem

THREADS_ENV = "SDMOR_THREADS"


def thread_count(threads=None):
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class TrialResult:
    index: int
    K: int
    bfr: tuple  # (approach 1, approach 2); None when undefined or flagged
    flagged: bool
    deviation: tuple  # per approach, per-k ||y_k - ybar_k||
    reference_norm: np.ndarray


@dataclass
class ApproachSummary:
    approach: int
    r: int
    N: int
    bfrs: list
    per_k_max_deviation: list
    representative_trial: int = -1

    @property
    def scored(self):
        return [b for b in self.bfrs if b is not None]

    def stats(self):
        s = self.scored
        if not s:
            return {"mean": None, "best": None, "worst": None}
        return {"mean": float(np.mean(s)), "best": float(max(s)), "worst": float(min(s))}


@dataclass
class CampaignReport:
    seed: int
    count: int
    horizon: float
    grid: tuple
    request: dict
    switching: str
    approaches: list
    reports: list
    flagged_trials: list
    horizon_check: dict
    traces: dict = field(default_factory=dict)

    def summary(self):
        out = {
            "seed": self.seed,
            "count": self.count,
            "horizon": self.horizon,
            "grid": list(self.grid),
            "request": self.request,
            "switching_distribution": self.switching,
            "horizon_rule": "K per trial: steps until elapsed time first reaches the horizon",
            "flagged_trials": list(self.flagged_trials),
            "approach_two_horizon_check": self.horizon_check,
            "approaches": [],
        }
        for a, rep in zip(self.approaches, self.reports):
            entry = {"approach": a.approach, "r": a.r, "N": a.N}
            entry.update(a.stats())
            entry["scored_trials"] = len(a.scored)
            entry["representative_trial"] = a.representative_trial
            entry["per_k_max_deviation"] = list(a.per_k_max_deviation)
            entry["reduction"] = rep.to_dict()
            entry["reduction"]["certificate"] = (
                None if rep.certificate is None else rep.certificate.to_dict(include_P=False)
            )
            out["approaches"].append(entry)
        return out


def _run_trial(index, seed, grid, T_total, models, distribution):
    full, red1, red2 = models
    u, sigma = horizon_sequence(seed, index, grid, T_total, full.m, distribution)
    y = simulate_ls(full, u, sigma)
    y1 = simulate_ls(red1, u, sigma)
    y2 = simulate_ls(red2, u, sigma)
    flagged = y.flagged or y1.flagged or y2.flagged
    scores = []
    for yb in (y1, y2):
        if flagged:
            scores.append(None)
            continue
        try:
            scores.append(bfr(y, yb))
        except UndefinedBFRError:
            scores.append(None)
    dev = tuple(np.linalg.norm(y.y - yb.y, axis=1) for yb in (y1, y2))
    trial = TrialResult(index, len(sigma) - 1, tuple(scores), flagged, dev, np.linalg.norm(y.y, axis=1))
    return trial, (y, y1, y2)


def run_comparison_campaign(
    plant,
    grid,
    request,
    count=200,
    seed=0,
    T_total=50.0,
    threads=None,
    distribution=UNIFORM,
    stable_inverse=None,
):
    """Score both approaches on ``count`` shared random trials.

    Returns a :class:`CampaignReport`. The approach-2 reduction is also
    checked against its matching horizon on every trial: for ``k <= N``
    the output gap must stay within ``1e-7 * (1 + ||y_k||)``.
    """
    sd = SampledDataSystem(plant, grid)
    full = build_switched_model(sd)
    red1, rep1 = approach_one(sd, request, stable_inverse=stable_inverse)
    red2, rep2 = approach_two(sd, request, stable_inverse=stable_inverse)
    models = (full, red1, red2)

    def work(i):
        return _run_trial(i, seed, sd.grid, T_total, models, distribution)[0]

    workers = thread_count(threads)
    if workers == 1:
        trials = [work(i) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(work, range(count)))

    K_max = max(t.K for t in trials)
    summaries = []
    for a, rep in enumerate((rep1, rep2)):
        dev = np.zeros(K_max + 1)
        for t in trials:
            d = t.deviation[a]
            dev[: d.size] = np.fmax(dev[: d.size], d)
        summ = ApproachSummary(rep.approach, rep.r, rep.N, [t.bfr[a] for t in trials], [float(x) for x in dev])
        scored = [(t.index, t.bfr[a]) for t in trials if t.bfr[a] is not None]
        if scored:
            mean = float(np.mean([b for _, b in scored]))
            summ.representative_trial = min(scored, key=lambda ib: (abs(ib[1] - mean), ib[0]))[0]
        summaries.append(summ)

    worst = 0.0
    for t in trials:
        lim = min(rep2.N, t.K)
        rel = t.deviation[1][: lim + 1] / (1.0 + t.reference_norm[: lim + 1])
        if not t.flagged and rel.size:
            worst = max(worst, float(np.max(rel)))
    horizon_check = {"N": rep2.N, "tol": HORIZON_TOL, "max_relative_deviation": worst, "passed": worst <= HORIZON_TOL}

    report = CampaignReport(
        seed=int(seed),
        count=int(count),
        horizon=float(T_total),
        grid=sd.grid.intervals,
        request=request.to_dict(),
        switching=distribution.describe(),
        approaches=summaries,
        reports=[rep1, rep2],
        flagged_trials=[t.index for t in trials if t.flagged],
        horizon_check=horizon_check,
    )
    for summ in summaries:
        if summ.representative_trial >= 0 and summ.representative_trial not in report.traces:
            _, traces = _run_trial(summ.representative_trial, seed, sd.grid, T_total, models, distribution)
            report.traces[summ.representative_trial] = traces
    return report


def trace_csv(traces):
    """CSV text: ``k,t,y_1..y_p,ybar1_1..ybar1_p,ybar2_1..ybar2_p``."""
    y, y1, y2 = traces
    p = y.y.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["k", "t"] + [f"y_{i}" for i in range(1, p + 1)]
    header += [f"ybar1_{i}" for i in range(1, p + 1)] + [f"ybar2_{i}" for i in range(1, p + 1)]
    w.writerow(header)
    for k in range(y.y.shape[0]):
        row = [k, repr(float(y.t[k]))]
        row += [repr(float(v)) for v in y.y[k]]
        row += [repr(float(v)) for v in y1.y[k]]
        row += [repr(float(v)) for v in y2.y[k]]
        w.writerow(row)
    return buf.getvalue()


def trace_dat(traces, title):
    """Whitespace-separated columns for gnuplot (``plot ... with steps``)."""
    y, y1, y2 = traces
    p = y.y.shape[1]
    lines = [f"# {title}", "# t " + " ".join(f"y{i} ybar1_{i} ybar2_{i}" for i in range(1, p + 1))]
    for k in range(y.y.shape[0]):
        cols = [repr(float(y.t[k]))]
        for i in range(p):
            cols += [repr(float(y.y[k, i])), repr(float(y1.y[k, i])), repr(float(y2.y[k, i]))]
        lines.append(" ".join(cols))
    return "\n".join(lines) + "\n"


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_campaign_outputs(report, out_dir):
    """Write ``summary.json`` plus, per approach, the CSV and gnuplot data
    of the trial whose BFR is closest to that approach's mean."""
    out_dir = Path(out_dir)
    written = []
    summary = report.summary()
    path = out_dir / "summary.json"
    write_atomic(path, dumps(summary))
    written.append(path)
    for summ in report.approaches:
        if summ.representative_trial < 0:
            continue
        traces = report.traces[summ.representative_trial]
        scores = [report.approaches[0].bfrs[summ.representative_trial], report.approaches[1].bfrs[summ.representative_trial]]
        title = (
            f"trial {summ.representative_trial} (closest to approach {summ.approach} mean BFR); "
            f"BFR approach 1 = {scores[0]}, approach 2 = {scores[1]}"
        )
        csv_path = out_dir / f"trace_approach{summ.approach}.csv"
        dat_path = out_dir / f"figure_approach{summ.approach}.dat"
        write_atomic(csv_path, trace_csv(traces))
        write_atomic(dat_path, trace_dat(traces, title))
        written += [csv_path, dat_path]
    return written
