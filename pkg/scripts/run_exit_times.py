#!/usr/bin/env python3
"""Exit-time histogram from the winding-1 phase (N=20, J=20, sigma=3 defaults).

Writes exits.csv and exit_fit.json (censoring-aware exponential rate plus the
bootstrap-corrected KS test) into --out.  Histogram the uncensored exit_time
column against Exp(rate_mle) to view the waiting-time law.
"""
import argparse

from rotorchain.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=20)
    ap.add_argument("--J", type=float, default=20.0)
    ap.add_argument("--sigma", type=float, default=3.0)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--replicas", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=str, default="results/exits")
    args = ap.parse_args()
    return cli_main(
        [
            "exits",
            "--N", str(args.N),
            "--J", str(args.J),
            "--sigma", str(args.sigma),
            "--k", str(args.k),
            "--replicas", str(args.replicas),
            "--seed", str(args.seed),
            "--out", args.out,
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
