"""Sweep the entropy and contrast thresholds and report how often each gate passes.

For every setting, random windows are drawn from a toy corpus and the script
counts placed icons per window and mean window attempts.  Useful for picking
thresholds on a new corpus.

    python scripts/gate_sweep.py --windows 40
"""
import argparse
import itertools

import numpy as np

from iconforge import synthgen, toy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--windows", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--entropy", type=float, nargs="+", default=[0.01, 0.05, 0.1, 0.2])
    ap.add_argument("--contrast", type=float, nargs="+", default=[0, 500, 2000])
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    corpus = toy.toy_corpus(rng, 10)
    icons = [i for i in toy.toy_icons(rng) if i.transparent]

    print(f"{'entropy':>8} {'contrast':>9} {'icons/win':>10} {'attempts':>9}")
    for ent, con in itertools.product(args.entropy, args.contrast):
        params = synthgen.AugmentParams(entropy_threshold=ent, contrast_threshold=con, rng_seed=args.seed)
        job = synthgen._Job(corpus, icons, params, "default")
        per_win, attempts = [], []
        for i in range(args.windows):
            try:
                s = synthgen.generate_sample(i, job)
            except RuntimeError:
                per_win.append(0)
                attempts.append(params.max_window_tries)
                continue
            per_win.append(len(s.boxes))
            attempts.append(s.attempts)
        print(f"{ent:8.3f} {con:9.0f} {np.mean(per_win):10.2f} {np.mean(attempts):9.2f}")


if __name__ == "__main__":
    main()
