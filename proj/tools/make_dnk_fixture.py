#!/usr/bin/env python3
"""Writes a synthetic Danish-style life table in the HMD 1x1 text layout.

The rates follow an infant + accident hump + Gompertz senescent pattern
with a linear improvement over calendar time; deaths are Poisson draws on
smooth exposures. Usage: make_dnk_fixture.py OUTPUT_DIR
"""

import pathlib
import sys

import numpy as np

YEARS = range(1950, 2020)
AGES = range(0, 111)
SEED = 20240131


def rates(age, year, sex_factor):
    t = year - 1950
    x = age + 0.5
    infant = 0.02 * np.exp(-0.045 * t) * np.exp(-3.0 * x)
    hump = 0.0004 * np.exp(-(((x - 22.0) / 7.0) ** 2))
    senescent = np.exp(-10.3 - 0.011 * t + 0.097 * x)
    return sex_factor * (infant + hump + 0.00015 + senescent)


def exposures(year, sex_factor):
    m = np.array([rates(a, 1980, sex_factor) for a in AGES])
    survival = np.exp(-np.concatenate([[0.0], np.cumsum(m)[:-1]]))
    births = 36000.0 * (1.0 + 0.002 * (year - 1950))
    return births * survival * np.exp(-0.5 * m)


def header(kind):
    return (f"Denmark (synthetic), {kind} (period 1x1)\tLast modified: 01 Jan 2024\n\n"
            f"{'Year':>6}{'Age':>13}{'Female':>19}{'Male':>17}{'Total':>16}\n")


def age_label(a):
    return "110+" if a == 110 else str(a)


def fmt(v, digits):
    return "." if v is None else f"{v:.{digits}f}"


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "DNK_synthetic")
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    deaths_lines, expo_lines, mx_lines = [], [], []
    for year in YEARS:
        cols = {}
        for sex, factor in (("Female", 1.0), ("Male", 1.3)):
            e = exposures(year, factor)
            m = np.array([rates(a, year, factor) for a in AGES])
            d = rng.poisson(e * m).astype(float)
            # the oldest ages are unpopulated in the first years
            if year < 1955:
                e[108:] = 0.0
                d[108:] = 0.0
            cols[sex] = (d, e)
        d_tot = cols["Female"][0] + cols["Male"][0]
        e_tot = cols["Female"][1] + cols["Male"][1]
        cols["Total"] = (d_tot, e_tot)
        for a in AGES:
            row = f"{year:>6}{age_label(a):>13}"
            d_vals = [cols[s][0][a] for s in ("Female", "Male", "Total")]
            e_vals = [round(cols[s][1][a], 2) for s in ("Female", "Male", "Total")]
            m_vals = [d / e if e > 0 else None for d, e in zip(d_vals, e_vals)]
            deaths_lines.append(row + "".join(f"{fmt(v, 2):>{w}}" for v, w in zip(d_vals, (19, 17, 16))))
            expo_lines.append(row + "".join(f"{fmt(v, 2):>{w}}" for v, w in zip(e_vals, (19, 17, 16))))
            mx_lines.append(row + "".join(f"{fmt(v, 6):>{w}}" for v, w in zip(m_vals, (19, 17, 16))))
    for name, kind, lines in (("Deaths_1x1.txt", "Deaths", deaths_lines),
                              ("Exposures_1x1.txt", "Exposures", expo_lines),
                              ("Mx_1x1.txt", "Death rates", mx_lines)):
        (out / name).write_text(header(kind) + "\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
