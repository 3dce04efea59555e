#!/usr/bin/env python3
"""Data for the multiplicative-flow figures: eigenvalue scatter of U G(t),
the boundary curves r_t(theta) e^{i theta} and (1/r_t) e^{i theta}, the
argument push-forward of the eigenvalues and the law of the unitary flow.

    python scripts/multiplicative_figure_data.py --out-dir out/mult
    # scatter: out/mult/eigenvalues.csv      (re, im)
    # curves:  out/mult/boundary_curves.csv  (theta, inner_re, inner_im, outer_re, outer_im)
    # hist:    out/mult/pushforward_arg.csv  (phi)
    # density: out/mult/law.csv              (phi, p)
"""

import argparse
import pathlib

import numpy as np

from freebrown.measures import SpectralMeasure
from freebrown.multiplicative import multiplicative_profile, phi_of_theta_array
from freebrown.rmt import sample_multiplicative, write_spectrum_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=0.8)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--atoms", default=f"{2*np.pi/5}:{1/3},{3*np.pi/4}:{2/3}",
                    help="comma list of theta:w atoms; 'haar' for Haar")
    ap.add_argument("--n-theta", type=int, default=1441)
    ap.add_argument("--out-dir", default="out/mult")
    args = ap.parse_args()

    if args.atoms == "haar":
        mu = SpectralMeasure.haar()
    else:
        pairs = [tuple(map(float, it.split(":"))) for it in args.atoms.split(",")]
        mu = SpectralMeasure.circle_atomic([p[0] for p in pairs], [p[1] for p in pairs])
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    spectrum = sample_multiplicative(mu, args.n, args.t, args.steps, args.seed)
    write_spectrum_csv(spectrum, out / "eigenvalues.csv")

    prof = multiplicative_profile(mu, args.t, args.n_theta)
    with open(out / "boundary_curves.csv", "w", encoding="utf-8") as fh:
        fh.write("theta,inner_re,inner_im,outer_re,outer_im\n")
        for th, r in zip(prof.thetas, prof.r):
            inner = r * np.exp(1j * th)
            outer = np.exp(1j * th) / r
            fh.write(
                f"{th:.17g},{inner.real:.17g},{inner.imag:.17g},"
                f"{outer.real:.17g},{outer.imag:.17g}\n"
            )

    # push the eigenvalue arguments through the boundary angle map
    angles = np.angle(spectrum.eigenvalues)
    phis = phi_of_theta_array(prof.measure_bar, args.t, angles)
    with open(out / "pushforward_arg.csv", "w", encoding="utf-8") as fh:
        fh.write("phi\n")
        for p in phis:
            fh.write(f"{p:.17g}\n")

    hit = prof.r < 1.0
    with open(out / "law.csv", "w", encoding="utf-8") as fh:
        fh.write("phi,p\n")
        for phi, r in zip(prof.phi[hit], prof.r[hit]):
            fh.write(f"{phi:.17g},{-np.log(r) / (np.pi * args.t):.17g}\n")

    print(f"wrote {out}/eigenvalues.csv boundary_curves.csv pushforward_arg.csv law.csv")


if __name__ == "__main__":
    main()
