#!/usr/bin/env python3
"""Data for the additive-flow figures: eigenvalue scatter of X + Z(t), the
support curves +-v_t(a), the push-forward of the eigenvalues to the real line
and the law of the semicircular flow superimposed on it.

Writes CSVs only; plot with any external tool, e.g.

    python scripts/additive_figure_data.py --out-dir out/additive
    # scatter:   out/additive/eigenvalues.csv   (re, im)
    # curves:    out/additive/support_curve.csv (a, v, minus_v)
    # histogram: out/additive/pushforward.csv   (value)
    # density:   out/additive/law.csv           (y, p)
"""

import argparse
import pathlib

import numpy as np

from freebrown.additive import additive_profile, psi_t_array, v_t_array
from freebrown.measures import SpectralMeasure
from freebrown.rmt import sample_additive, write_spectrum_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--atoms", default="-0.8:0.25,0.8:0.75",
                    help="comma list of x:w atoms")
    ap.add_argument("--out-dir", default="out/additive")
    args = ap.parse_args()

    pairs = [tuple(map(float, item.split(":"))) for item in args.atoms.split(",")]
    mu = SpectralMeasure.real_atomic([p[0] for p in pairs], [p[1] for p in pairs])
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    spectrum = sample_additive(mu, args.n, args.t, args.seed)
    write_spectrum_csv(spectrum, out / "eigenvalues.csv")

    half = float(np.max(np.abs(mu.locations))) + 2.0 * np.sqrt(args.t)
    grid = np.linspace(-half, half, 801)
    prof = additive_profile(mu, args.t, grid)
    with open(out / "support_curve.csv", "w", encoding="utf-8") as fh:
        fh.write("a,v,minus_v\n")
        for a, v in zip(prof.grid, prof.v):
            fh.write(f"{a:.17g},{v:.17g},{-v:.17g}\n")

    # push the eigenvalues to the real line: Psi(a+ib) = psi_t(a)
    re = spectrum.eigenvalues.real
    v = v_t_array(mu, args.t, re)
    pushed = psi_t_array(mu, args.t, re, v)
    with open(out / "pushforward.csv", "w", encoding="utf-8") as fh:
        fh.write("value\n")
        for y in pushed:
            fh.write(f"{y:.17g}\n")

    hit = prof.v > 0
    with open(out / "law.csv", "w", encoding="utf-8") as fh:
        fh.write("y,p\n")
        for y, p in zip(prof.psi[hit], prof.v[hit] / (np.pi * args.t)):
            fh.write(f"{y:.17g},{p:.17g}\n")

    print(f"wrote {out}/eigenvalues.csv support_curve.csv pushforward.csv law.csv")


if __name__ == "__main__":
    main()
