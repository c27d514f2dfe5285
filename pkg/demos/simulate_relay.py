"""Monte Carlo BER of the lifted [5632, 4096] AR3A code, EF vs DF.

A short run by default (a few hundred blocks per point); raise
--min-error-blocks and --max-blocks for publication-grade points.
Compare the output with theory_curves.py.
"""
import argparse
from dataclasses import replace

from protorelay.harness import SimConfig, build_code, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ebn0", type=float, nargs="+", default=[0.8, 1.0, 1.2])
    ap.add_argument("--max-blocks", type=int, default=512)
    ap.add_argument("--min-error-blocks", type=int, default=50)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = SimConfig(family="ar3a", n=3, z=512, m=2.0, ebn0_db=tuple(args.ebn0),
                    max_blocks=args.max_blocks, min_error_blocks=args.min_error_blocks,
                    workers=args.workers)
    code = build_code(cfg)
    print(f"code: N={code.n_vars} transmitted={code.n_transmitted} K={code.k}")
    for proto in ("ef", "df"):
        pts = run_experiment(replace(cfg, protocol=proto), code=code)
        for p in pts:
            print(f"{proto.upper()}  {p.ebn0_db:4.1f} dB  BER {p.ber:.2e}  BLER {p.bler:.2e}  "
                  f"relay failures {p.relay_failure_rate:.3f}  blocks {p.blocks}")


if __name__ == "__main__":
    main()
