"""Per-step W1 and TV distances of the discrete-noise AR(1) chain to its grid stationary law."""
import argparse

from markov_hoeffding.chains import Ar1Discrete
from markov_hoeffding.core import DiscreteMeasure
from markov_hoeffding.ipm import tv_distance, w1_distance_1d


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--digits", type=int, default=6, help="grid resolution 10^-digits of the stationary law")
    ap.add_argument("--steps", type=int, default=5)
    a = ap.parse_args()
    chain = Ar1Discrete(a.digits)
    pi = chain.stationary()
    print("x,n,w1,bound_10^-n,tv")
    for x in (0.0, 0.13, 0.5, 0.99):
        for n in range(1, a.steps + 1):
            law = chain.k_step(DiscreteMeasure.dirac(x), n)
            print(f"{x:g},{n},{w1_distance_1d(law, pi).value:.6e},{10.0**-n:.0e},{tv_distance(law, pi).value:.8f}")


if __name__ == "__main__":
    main()
