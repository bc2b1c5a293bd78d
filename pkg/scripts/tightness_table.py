"""Time-independent bound (Gamma = 2/lam) against Glynn-Ormoneit across lam and n."""
import argparse

import numpy as np

from markov_hoeffding.bounds import compare_tightness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.5, 1.0])
    a = ap.parse_args()
    print("lam,n,eps,in_regime,ours,glynn,ratio")
    for lam in (0.1, 0.3, 0.5, 1.0):
        for n in (100, 1000):
            for r in compare_tightness(n, a.eps, 1, lam, 1.0, span=2.0, strict=False):
                ratio = r["glynn"] / r["ours"] if r["ours"] > 0 else np.inf
                print(f"{lam},{n},{r['eps']},{r['in_regime']},{r['ours']:.6g},{r['glynn']:.6g},{ratio:.4g}")


if __name__ == "__main__":
    main()
