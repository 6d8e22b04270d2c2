"""Figure sweeps and model-vs-simulation comparison."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, List, Optional, Sequence, Tuple

from .config import ConfigError, ExperimentConfig, preset
from .coverage import total_coverage
from .env_stats import blockage_params, p_los
from .geometry import in_sector
from .scene_sim import mc_cell_coverage, mc_coverage_many


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    beam_theta_deg: float
    beam_mu_deg: float
    user_theta_deg: float
    user_d: float
    lam: float
    p_direct: float
    p_reflected: float
    p_total: float
    mc_p_hat: float
    mc_ci_low: float
    mc_ci_high: float
    abs_gap: float
    mc_stderr: float
    mc_n: int


@dataclass(frozen=True)
class CellRow:
    experiment: str
    user_theta_deg: float
    user_d: float
    lam: float
    n_beams: int
    p_los: float
    direct_p_hat: float
    direct_ci_low: float
    direct_ci_high: float
    total_p_hat: float
    total_ci_low: float
    total_ci_high: float
    gap: float
    mc_stderr: float
    mc_n: int


def _analytic_job(args):
    radio, beam, env, user, quad, mode = args
    return total_coverage(radio, beam, env, user, quad, mode)


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_beam_table(cfg: ExperimentConfig, simulate: bool = True) -> List[ResultRow]:
    """Analytic and (optionally) simulated coverage for every (lambda, user, beam).

    Rows come out in sweep order: density, then user, then beam. Beams at
    the same (density, user) point share their drops.
    """
    radio = cfg.radio.params()
    beams = cfg.beam_specs()
    beam_deg = cfg.beams.angles_deg()
    users = cfg.user_points()
    user_deg = cfg.users.positions()
    mode = cfg.sim.range_mode
    points = [(lam, k) for lam in cfg.env.densities() for k in range(len(users))]

    jobs = [
        (radio, b, cfg.env.params(lam), users[k], cfg.quad, mode)
        for lam, k in points for b in beams
    ]
    analytic = _map(_analytic_job, jobs, cfg.sim.workers)

    rows = []
    for i, (lam, k) in enumerate(points):
        env = cfg.env.params(lam)
        mc = mc_coverage_many(env, radio, beams, users[k], cfg.sim) if simulate else [None] * len(beams)
        for j, (b_deg, est) in enumerate(zip(beam_deg, mc)):
            a = analytic[i * len(beams) + j]
            if est is None:
                p_hat = lo = hi = se = gap = math.nan
                n = 0
            else:
                p_hat, (lo, hi), se, n = est.p_hat, est.ci95, est.stderr, est.n
                gap = abs(a.p_total - p_hat)
            rows.append(ResultRow(
                cfg.experiment, b_deg[0], b_deg[1], user_deg[k][0], user_deg[k][1], lam,
                a.p_direct, a.p_reflected, a.p_total, p_hat, lo, hi, gap, se, n,
            ))
    return rows


def run_cell_table(cfg: ExperimentConfig) -> List[CellRow]:
    radio = cfg.radio.params()
    beams = cfg.beam_specs()
    rows = []
    for lam in cfg.env.densities():
        env = cfg.env.params(lam)
        bp = blockage_params(env)
        for (t_deg, d), user in zip(cfg.users.positions(), cfg.user_points()):
            cell = mc_cell_coverage(env, radio, beams, user, cfg.sim)
            both, direct = cell.with_reflections, cell.direct_only
            rows.append(CellRow(
                cfg.experiment, t_deg, d, lam, len(beams), p_los(bp, d),
                direct.p_hat, direct.ci95[0], direct.ci95[1],
                both.p_hat, both.ci95[0], both.ci95[1],
                both.p_hat - direct.p_hat, both.stderr, both.n,
            ))
    return rows


def run(cfg: ExperimentConfig):
    if cfg.kind == "cell":
        return run_cell_table(cfg)
    return run_beam_table(cfg)


def _with_preset(name: str, cfg: Optional[ExperimentConfig]) -> ExperimentConfig:
    return cfg if cfg is not None else preset(name)


def run_fig3(cfg: Optional[ExperimentConfig] = None) -> List[ResultRow]:
    """Coverage of each of 36 non-overlapping 10 deg beams, user (90 deg, 50 m)."""
    return run_beam_table(_with_preset("fig3", cfg))


def run_fig4(cfg: Optional[ExperimentConfig] = None) -> List[CellRow]:
    """Cell coverage, direct only vs with reflections, over user distance."""
    return run_cell_table(_with_preset("fig4", cfg))


def run_fig5(cfg: Optional[ExperimentConfig] = None) -> List[ResultRow]:
    """Direct and two reflected beams over user distance."""
    return run_beam_table(_with_preset("fig5", cfg))


def run_fig6(cfg: Optional[ExperimentConfig] = None) -> List[ResultRow]:
    """Direct and two reflected beams over building density."""
    return run_beam_table(_with_preset("fig6", cfg))


# -- comparison ----------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    row: ResultRow
    tolerance: float
    passed: bool


def row_tolerance(row: ResultRow, cfg: ExperimentConfig) -> float:
    """Allowed |analytic - MC| for one row, before the n-sigma widening."""
    c = cfg.compare
    direct = bool(in_sector(math.radians(row.user_theta_deg), math.radians(row.beam_theta_deg),
                            math.radians(row.beam_mu_deg)))
    if direct:
        return c.tol_direct
    if row.beam_mu_deg <= c.narrow_width_deg and row.user_d <= c.near_distance_m:
        return c.tol_reflected
    return c.tol_reflected_loose


def compare(cfg: ExperimentConfig, rows: Optional[Sequence[ResultRow]] = None) -> Tuple[List[Verdict], bool]:
    if cfg.kind != "beams":
        raise ConfigError("compare needs a per-beam experiment (kind 'beams')")
    rows = run_beam_table(cfg) if rows is None else rows
    verdicts = []
    for row in rows:
        tol = row_tolerance(row, cfg)
        allowed = max(tol, cfg.compare.n_sigma * row.mc_stderr)
        verdicts.append(Verdict(row, allowed, row.abs_gap <= allowed))
    return verdicts, all(v.passed for v in verdicts)


def format_report(verdicts: Iterable[Verdict]) -> str:
    lines = []
    for v in verdicts:
        r = v.row
        lines.append(
            f"{'PASS' if v.passed else 'FAIL'}  lam={r.lam:g} user=({r.user_theta_deg:g}deg,{r.user_d:g}m) "
            f"beam=({r.beam_theta_deg:g}deg,{r.beam_mu_deg:g}deg) analytic={r.p_total:.5f} "
            f"mc={r.mc_p_hat:.5f} gap={r.abs_gap:.5f} allowed={v.tolerance:.5f}"
        )
    return "\n".join(lines)


# -- output --------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(rows: Sequence) -> str:
    if not rows:
        return ""
    names = [f.name for f in fields(rows[0])]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in rows:
        writer.writerow([_cell(getattr(row, n)) for n in names])
    return buf.getvalue()


def to_json(rows: Sequence) -> str:
    def clean(d):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}
    return json.dumps([clean(asdict(r)) for r in rows], indent=2) + "\n"


def render(rows: Sequence, fmt: str) -> str:
    return to_json(rows) if fmt == "json" else to_csv(rows)
