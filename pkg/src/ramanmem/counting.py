"""Estimators on herald-conditioned coincidence counts.

A run record holds the counts of one measurement run for one setting:
``scd`` (memory on), ``sd`` (control blocked), ``cd`` (signal blocked) or
``d`` (pump only). Each record carries the herald count and, per time bin
(``in``/``out``), the herald-H, herald-V and herald-H-V coincidences.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SETTINGS = ("scd", "sd", "cd", "d")
BINS = ("in", "out")
CSV_COLUMNS = ("run_id", "setting", "bin", "duration_s", "c_her", "c_her_H", "c_her_V", "c_her_H_V")


class RecordError(ValueError):
    pass


@dataclass(frozen=True)
class BinCounts:
    c_her_H: int
    c_her_V: int
    c_her_H_V: int


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    setting: str
    duration: float
    c_her: int
    bins: dict = field(default_factory=dict)
    group: str = ""

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise RecordError(f"run {self.run_id}: unknown setting {self.setting!r}")
        if not self.duration > 0:
            raise RecordError(f"run {self.run_id}: duration must be positive")
        if self.c_her < 0:
            raise RecordError(f"run {self.run_id}: negative herald count")
        for name, b in self.bins.items():
            if name not in BINS:
                raise RecordError(f"run {self.run_id}: unknown time bin {name!r}")
            if min(b.c_her_H, b.c_her_V, b.c_her_H_V) < 0:
                raise RecordError(f"run {self.run_id}/{name}: negative counts")
            if b.c_her_H_V > min(b.c_her_H, b.c_her_V):
                raise RecordError(f"run {self.run_id}/{name}: triple coincidences exceed pair coincidences")
            if max(b.c_her_H, b.c_her_V) > self.c_her:
                raise RecordError(f"run {self.run_id}/{name}: coincidences exceed herald counts")

    @property
    def f_rep(self) -> float:
        return self.c_her / self.duration


@dataclass(frozen=True)
class G2Estimate:
    value: float
    error: float
    counts: dict


def _select(records: Iterable[RunRecord], setting: str, group: str | None = None) -> list[RunRecord]:
    return [r for r in records if r.setting == setting and (group is None or r.group == group)]


def summed_counts(records: Iterable[RunRecord], setting: str, bin: str, group: str | None = None) -> dict:
    chosen = [r for r in _select(records, setting, group) if bin in r.bins]
    if not chosen:
        raise RecordError(f"no records for setting {setting!r}, bin {bin!r}")
    return {
        "c_her": sum(r.c_her for r in chosen),
        "c_her_H": sum(r.bins[bin].c_her_H for r in chosen),
        "c_her_V": sum(r.bins[bin].c_her_V for r in chosen),
        "c_her_H_V": sum(r.bins[bin].c_her_H_V for r in chosen),
        "duration": sum(r.duration for r in chosen),
        "runs": len(chosen),
    }


def pooled_g2(records: Iterable[RunRecord], setting: str, bin: str, group: str | None = None) -> G2Estimate:
    """g2 = p_HV / (p_H p_V) from counts summed over all runs of a setting."""
    c = summed_counts(records, setting, bin, group)
    her, h, v, hv = c["c_her"], c["c_her_H"], c["c_her_V"], c["c_her_H_V"]
    if h == 0 or v == 0 or her == 0:
        raise ZeroDivisionError(f"zero pair or herald counts for {setting}/{bin}")
    g2 = hv * her / (h * v)
    # Poisson errors on every summed count, first-order propagation
    err = np.sqrt((her / (h * v)) ** 2 * hv + g2**2 * (1.0 / her + 1.0 / h + 1.0 / v))
    return G2Estimate(float(g2), float(err), c)


def per_run_g2(record: RunRecord, bin: str) -> float:
    b = record.bins[bin]
    if b.c_her_H == 0 or b.c_her_V == 0:
        raise ZeroDivisionError(f"run {record.run_id}/{bin}: zero pair coincidences")
    return b.c_her_H_V * record.c_her / (b.c_her_H * b.c_her_V)


def per_run_values(records: Iterable[RunRecord], setting: str, bin: str, group: str | None = None) -> np.ndarray:
    return np.array([per_run_g2(r, bin) for r in _select(records, setting, group) if bin in r.bins])


def weighted_mean_g2(values: Sequence[float], weights: Sequence[float], errors: Sequence[float] | None = None):
    """Weighted mean with weights ``weights`` (measurement durations).

    With ``errors`` the uncertainty is propagated linearly; otherwise it is the
    weighted standard error of the scatter.
    """
    x = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.size == 0:
        raise ValueError("no values to average")
    if x.shape != w.shape:
        raise ValueError("values and weights differ in length")
    if (w <= 0).any():
        raise ValueError("weights must be positive")
    W = w.sum()
    mean = float((w * x).sum() / W)
    if errors is not None:
        e = np.asarray(errors, dtype=float)
        return mean, float(np.sqrt(((w * e) ** 2).sum()) / W)
    if x.size == 1:
        return mean, 0.0
    n_eff = W**2 / (w**2).sum()
    var = (w * (x - mean) ** 2).sum() / W * n_eff / (n_eff - 1)
    return mean, float(np.sqrt(var / n_eff))


def _signal_rate(records: list[RunRecord], setting: str, bin: str) -> tuple[float, float]:
    """Herald-normalised signal counts (H + V) and their Poisson error."""
    chosen = [r for r in records if r.setting == setting and bin in r.bins]
    if not chosen:
        return 0.0, 0.0
    her = sum(r.c_her for r in chosen)
    if her == 0:
        raise ZeroDivisionError(f"zero herald counts for setting {setting}")
    c = sum(r.bins[bin].c_her_H + r.bins[bin].c_her_V for r in chosen)
    return c / her, np.sqrt(c) / her


REQUIRED_EFFICIENCY = ("scd", "cd", "sd")


def efficiency_from_counts(records: Iterable[RunRecord], group: str | None = None) -> tuple[float, float]:
    """Total memory efficiency from the four settings; ``d`` defaults to zero."""
    records = [r for r in records if group is None or r.group == group]
    present = {r.setting for r in records}
    missing = [s for s in REQUIRED_EFFICIENCY if s not in present]
    if missing:
        raise RecordError(
            f"efficiency needs settings {', '.join(REQUIRED_EFFICIENCY)} (d optional); missing: {', '.join(missing)}"
        )
    scd, e_scd = _signal_rate(records, "scd", "out")
    cd, e_cd = _signal_rate(records, "cd", "out")
    sd_out, e_sd_out = _signal_rate(records, "sd", "out")
    d_out, e_d_out = _signal_rate(records, "d", "out")
    sd_in, e_sd_in = _signal_rate(records, "sd", "in")
    d_in, e_d_in = _signal_rate(records, "d", "in")
    return efficiency_from_rates(
        (scd, cd, sd_out, d_out, sd_in, d_in), (e_scd, e_cd, e_sd_out, e_d_out, e_sd_in, e_d_in)
    )


def efficiency_from_rates(rates, errors=None) -> tuple[float, float]:
    """rates = (scd_out, cd_out, sd_out, d_out, sd_in, d_in), already normalised."""
    scd, cd, sd_out, d_out, sd_in, d_in = rates
    den = sd_in - d_in
    if den == 0:
        raise ZeroDivisionError("input signal minus background is zero")
    num = scd - cd - (sd_out - d_out)
    eta = num / den
    if errors is None:
        return float(eta), 0.0
    e_scd, e_cd, e_sd_out, e_d_out, e_sd_in, e_d_in = errors
    err = np.sqrt(e_scd**2 + e_cd**2 + e_sd_out**2 + e_d_out**2 + eta**2 * (e_sd_in**2 + e_d_in**2)) / abs(den)
    return float(eta), float(err)


def heralding_efficiency(c_her_sig: float, c_her: float, T_tot: float, eta_spcm: float) -> float:
    den = c_her * T_tot * eta_spcm
    if den <= 0:
        raise ZeroDivisionError("herald counts, transmission and detector efficiency must be positive")
    return c_her_sig / den


# -- CSV ---------------------------------------------------------------------


def read_records(path: str | Path) -> list[RunRecord]:
    """Read the run-record CSV (one row per run x setting x bin).

    An optional ``group`` column separates signal types sharing a setting.
    """
    rows: dict = defaultdict(dict)
    meta: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise RecordError(f"{path}: missing columns {', '.join(missing)}")
        for line, row in enumerate(reader, start=2):
            try:
                key = (row.get("group", "") or "", row["run_id"], row["setting"])
                bin_name = row["bin"]
                duration, c_her = float(row["duration_s"]), int(row["c_her"])
                counts = BinCounts(int(row["c_her_H"]), int(row["c_her_V"]), int(row["c_her_H_V"]))
            except (TypeError, ValueError) as exc:
                raise RecordError(f"{path}:{line}: {exc}") from exc
            if key in meta and meta[key] != (duration, c_her):
                raise RecordError(f"{path}:{line}: inconsistent duration/herald counts for run {key[1]}")
            if bin_name in rows[key]:
                raise RecordError(f"{path}:{line}: duplicate bin {bin_name!r} for run {key[1]}")
            meta[key] = (duration, c_her)
            rows[key][bin_name] = counts
    return [
        RunRecord(run_id=k[1], setting=k[2], duration=meta[k][0], c_her=meta[k][1], bins=rows[k], group=k[0])
        for k in rows
    ]


def write_records(records: Iterable[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("group",) + CSV_COLUMNS)
        for r in records:
            for name in BINS:
                if name in r.bins:
                    b = r.bins[name]
                    writer.writerow((r.group, r.run_id, r.setting, name, repr(r.duration), r.c_her,
                                     b.c_her_H, b.c_her_V, b.c_her_H_V))


def groups(records: Iterable[RunRecord]) -> list[str]:
    return sorted({r.group for r in records})
