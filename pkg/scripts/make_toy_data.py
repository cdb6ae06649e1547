"""Write a procedural toy workspace (corpus, icon manifest, embeddings, vocab, tag data).

    python scripts/make_toy_data.py --out toy --images 20
"""
import argparse

from iconforge.toy import write_toy_workspace


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--images", type=int, default=20)
    ap.add_argument("--icons", type=int, default=24)
    ap.add_argument("--docs", type=int, default=200)
    ap.add_argument("--dim", type=int, default=32)
    args = ap.parse_args()
    paths = write_toy_workspace(args.out, args.seed, args.images, args.icons, args.docs, args.dim)
    for k, v in paths.items():
        print(f"{k:11s} {v}")


if __name__ == "__main__":
    main()
