"""Regenerate the count-record fixtures.

Totals follow the published average coincidence rates times the total
measurement time; the herald rate is back-solved so that the pooled
out-bin g2 reproduces the quoted value (c_her = g2 * rate_H * rate_V / rate_HV).
Per-run counts are a multinomial split of the totals over the runs, so the
pooled estimators see exact totals while runs scatter like real data.

    python tests/fixtures/make_fixtures.py
"""

from pathlib import Path

import numpy as np

from ramanmem.counting import BinCounts, RunRecord, write_records

HERE = Path(__file__).parent

# name, setting, minutes, herald rate (Hz), in (H, V, HV) Hz, out (H, V, HV) Hz, runs
TABLE = (
    ("spdc", "scd", 295, 5940.0, (28.37, 28.6, 0.126), (29.1, 29.4, 0.229), 10),
    ("coh_0.23", "scd", 345, 5741.0, (26.49, 25.8, 0.166), (32.49, 32.31, 0.309), 12),
    ("noise", "cd", 1702, 5136.0, (7.58, 7.26, 0.017), (19.13, 18.95, 0.12), 30),
)


def split(total: int, weights: np.ndarray, rng) -> np.ndarray:
    return rng.multinomial(total, weights / weights.sum())


def table_records(rng) -> list[RunRecord]:
    records = []
    for name, setting, minutes, f_her, rin, rout, n_runs in TABLE:
        seconds = minutes * 60.0
        dur = rng.uniform(0.7, 1.3, n_runs)
        dur = np.round(dur / dur.sum() * seconds, 1)
        dur[-1] = round(seconds - dur[:-1].sum(), 1)
        her = split(int(round(f_her * seconds)), dur, rng)
        per_bin = {}
        for bin_name, (h, v, hv) in (("in", rin), ("out", rout)):
            H = split(int(round(h * seconds)), dur, rng)
            V = split(int(round(v * seconds)), dur, rng)
            HV = split(int(round(hv * seconds)), dur, rng)
            per_bin[bin_name] = (H, V, HV)
        for j in range(n_runs):
            bins = {b: BinCounts(int(H[j]), int(V[j]), int(HV[j])) for b, (H, V, HV) in per_bin.items()}
            records.append(RunRecord(f"{name}-{j + 1:02d}", setting, float(dur[j]), int(her[j]), bins, name))
    return records


# Herald-normalised H+V rates per setting and bin for the efficiency fixture:
# eta = (0.0262 - 0.0159 - (0.0004 - 0.0002)) / (0.0480 - 0.0002) = 0.211
EFF_RATES = {
    "scd": {"out": 0.0262},
    "cd": {"out": 0.0159},
    "sd": {"in": 0.0480, "out": 0.0004},
    "d": {"in": 0.0002, "out": 0.0002},
}
EFF_HERALDS = {"scd": 61_000, "cd": 61_000, "sd": 20_400, "d": 20_400}
EFF_RUNS = 8


def efficiency_records(rng) -> list[RunRecord]:
    records = []
    for setting, rates in EFF_RATES.items():
        total_her = EFF_HERALDS[setting]
        dur = np.full(EFF_RUNS, total_her / 6000.0 / EFF_RUNS)
        her = split(total_her, dur, rng)
        per_bin = {}
        for bin_name, r in rates.items():
            counts = int(round(r * total_her))
            H = split(counts // 2, dur, rng)
            V = split(counts - counts // 2, dur, rng)
            per_bin[bin_name] = (H, V)
        for j in range(EFF_RUNS):
            bins = {b: BinCounts(int(H[j]), int(V[j]), 0) for b, (H, V) in per_bin.items()}
            records.append(RunRecord(f"eff-{j + 1:02d}", setting, float(dur[j]), int(her[j]), bins))
    return records


def main():
    rng = np.random.default_rng(20240501)
    write_records(table_records(rng), HERE / "table_s1_runs.csv")
    write_records(efficiency_records(rng), HERE / "efficiency_runs.csv")


if __name__ == "__main__":
    main()
