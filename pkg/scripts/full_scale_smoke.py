"""Time generation of a 10K-window training set from a 100-image toy corpus.

    python scripts/full_scale_smoke.py --out /tmp/smoke --workers 0
"""
import argparse
import os
import time

from iconforge import synthgen
from iconforge.toy import write_toy_workspace


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--windows", type=int, default=10_000)
    ap.add_argument("--images", type=int, default=100)
    ap.add_argument("--workers", type=int, default=0, help="0 = one per CPU")
    args = ap.parse_args()

    ws = write_toy_workspace(os.path.join(args.out, "ws"), n_images=args.images, n_docs=1)
    corpus = synthgen.load_corpus(ws["corpus"])
    icons = synthgen.load_icon_manifest(ws["icons"])
    t0 = time.time()
    synthgen.generate_dataset(corpus, icons, synthgen.AugmentParams(), args.windows,
                              os.path.join(args.out, "gen"), workers=args.workers)
    dt = time.time() - t0
    workers = args.workers or os.cpu_count()
    print(f"{args.windows} windows, {workers} workers: {dt:.0f}s ({1000 * dt / args.windows:.0f} ms/window)")


if __name__ == "__main__":
    main()
