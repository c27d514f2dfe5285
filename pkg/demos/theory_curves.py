"""Theoretical BER of the rate-4/5 AR3A code under EF and DF relaying.

Shows the waterfall at each fading depth and how little DF loses against an
error-free relay.  Writes an optional CSV and a PNG if matplotlib is around.
"""
import argparse

import numpy as np

from protorelay.ber_theory import ber_crossing, df_ber_curve, ef_ber_curve
from protorelay.pexit import draw_relay_gains
from protorelay.protograph import build_ar3a


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=10_000)
    ap.add_argument("--png", default=None, help="save a plot here")
    args = ap.parse_args()

    base = build_ar3a(3)
    grid = np.round(np.arange(-0.5, 2.01, 0.1), 2)
    curves = {}
    for m in (1.0, 2.0, 3.0, 4.0):
        g = draw_relay_gains(base.cols, m, 0.4, args.q, seed=0)
        curves["EF", m] = [p.ber for p in ef_ber_curve(base, m, 0.4, grid, gains=g)]
        curves["DF", m] = [p.ber for p in df_ber_curve(base, m, 0.4, grid, gains=g)]
        x_ef = ber_crossing(base, m, 1e-4, "ef", gains=g, lo_db=-1.0, hi_db=4.0)
        x_df = ber_crossing(base, m, 1e-4, "df", gains=g, lo_db=-1.0, hi_db=4.0)
        print(f"m={m:g}: BER 1e-4 reached at {x_ef:.3f} dB (EF), {x_df:.3f} dB (DF)")

    if args.png:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(6, 4))
        for (proto, m), ber in curves.items():
            ber = np.maximum(ber, 1e-12)
            ax.semilogy(grid, ber, "-" if proto == "EF" else "--", label=f"{proto} m={m:g}")
        ax.set_ylim(1e-7, 1)
        ax.set_xlabel("Eb/N0 (dB)")
        ax.set_ylabel("BER")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=7, ncol=2)
        fig.tight_layout()
        fig.savefig(args.png, dpi=120)
        print("saved", args.png)


if __name__ == "__main__":
    main()
