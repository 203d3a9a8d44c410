#!/usr/bin/env python3
"""Error of the 1-D circle DMK solution against mu = pi - |phi| as n grows."""
import argparse
import time

import numpy as np

from otcut.oracles import circle_density, circle_dmk_1d, circle_potential


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64, 128, 256, 512])
    args = ap.parse_args()
    print(f"{'n':>6} {'steps':>6} {'err_mu/pi':>11} {'err_u/pi':>11} {'seconds':>8}")
    for n in args.sizes:
        t0 = time.perf_counter()
        sol = circle_dmk_1d(n)
        err_mu = np.max(np.abs(sol.mu - circle_density(sol.phi_mid))) / np.pi
        err_u = np.max(np.abs(sol.u - circle_potential(sol.phi_nodes))) / np.pi
        print(f"{n:6d} {sol.log.records[-1].step:6d} {err_mu:11.3e} {err_u:11.3e} {time.perf_counter() - t0:8.2f}")


if __name__ == "__main__":
    main()
