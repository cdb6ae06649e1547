"""``iconforge`` command line.

Exit codes: 0 success, 1 invalid input or usage, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import aggregate, config as configmod, imaging, render, synthgen, tiler
from .boxes import BBox
from .evaluate import EvalConfig, consistency, evaluate_hashtags, evaluate_proposals
from .jsonl import SCHEMA_VERSION, RecordError, dumps, read_jsonl, write_jsonl
from .proposals import Detection, baseline_propose, ingest_detections
from .summarize import (
    BaselineClassifier, EmbeddingTable, FileClassifier, TagPredictor, TagVocabulary,
    mean_embed, NoKnownWords, load_words, summarize, train_tag_predictor,
)

log = logging.getLogger("iconforge")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input not found: {p}")
    return p


def _load_config(args) -> configmod.Config:
    cfg = configmod.load(_existing(args.config)) if getattr(args, "config", None) else configmod.Config()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        cfg.augment.rng_seed = args.seed
    return cfg


def cmd_gen(args) -> None:
    cfg = configmod.load(_existing(args.params)) if args.params else configmod.Config()
    if args.seed is not None:
        cfg.augment.rng_seed = args.seed
    corpus = synthgen.load_corpus(args.corpus)
    if not corpus:
        raise ValueError(f"no PNG/JPEG images in {args.corpus}")
    icons = synthgen.load_icon_manifest(_existing(args.icons))
    mode = args.baseline or "default"
    synthgen.generate_dataset(corpus, icons, cfg.augment, args.n, args.out, mode, args.workers)


def cmd_tile(args) -> None:
    image = imaging.load_image(_existing(args.image), "RGB")
    tiler.write_tiles(image, args.image_id or Path(args.image).stem, args.out)


def cmd_propose_baseline(args) -> None:
    records = []
    for index_path in args.tiles:
        index_path = _existing(index_path)
        index = json.loads(index_path.read_text())
        for t in index["tiles"]:
            img = imaging.load_image(_existing(index_path.parent / t["path"]), "RGB")
            for d in baseline_propose(img):
                records.append({"schema_version": SCHEMA_VERSION, "tile_id": t["id"],
                                **d.box.as_dict(), "score": d.score})
    write_jsonl(args.out, records)


def cmd_aggregate(args) -> None:
    cfg = _load_config(args)
    a = cfg.aggregate
    t = a.threshold if args.threshold is None else args.threshold
    dets = ingest_detections(_existing(args.dets), [_existing(p) for p in args.tiles])
    merged = aggregate.merge_by_image(
        aggregate.threshold(dets, t), iou_thresh=a.nms_iou, containment_thresh=a.containment
    )
    write_jsonl(args.out, [{"schema_version": SCHEMA_VERSION, **d.record()} for d in merged])


def _boxes(rec) -> list[BBox]:
    return [BBox.from_dict(b) for b in rec.get("boxes", [])]


def cmd_eval(args) -> None:
    cfg = _load_config(args).eval
    if args.iou is not None:
        cfg = EvalConfig(args.iou, cfg.beta)
    pred = _existing(args.pred)
    if args.mode == "proposals":
        if not args.gt:
            raise UsageError("--gt is required for proposals mode")
        gts = {str(r["image_id"]): _boxes(r) for _, r in read_jsonl(_existing(args.gt))}
        props: dict = {}
        for _, r in read_jsonl(pred):
            props.setdefault(str(r["image_id"]), []).append((BBox.from_dict(r), float(r["score"])))
        report = evaluate_proposals(props, gts, cfg).to_dict()
    elif args.mode == "hashtags":
        if not args.gt:
            raise UsageError("--gt is required for hashtags mode")
        gts = {(str(r["image_id"]), r["tag"]): _boxes(r) for _, r in read_jsonl(_existing(args.gt))}
        preds, ranked = {}, {}
        for _, r in read_jsonl(pred):
            key = (str(r["image_id"]), r["tag"])
            preds[key] = BBox.from_dict(r)
            if "ranked" in r:
                ranked[key] = [(BBox.from_dict(b), float(b["score"])) for b in r["ranked"]]
        report = evaluate_hashtags(preds, gts, ranked or None, cfg.iou_match).to_dict()
    else:
        sets: dict = {}
        for _, r in read_jsonl(pred):
            sets.setdefault(str(r["image_id"]), {})[str(r["annotator"])] = _boxes(r)
        if args.gt:
            for _, r in read_jsonl(_existing(args.gt)):
                sets.setdefault(str(r["image_id"]), {})["original"] = _boxes(r)
        report = consistency(sets, cfg)
    report = {"schema_version": SCHEMA_VERSION, "mode": args.mode, **report}
    Path(args.report).write_text(dumps(report) + "\n")


def cmd_train_tags(args) -> None:
    full = _load_config(args)
    cfg = full.summarize
    table = EmbeddingTable.load(_existing(args.embeddings))
    vocab = TagVocabulary.load(_existing(args.vocab))
    X, Y = [], []
    for lineno, r in read_jsonl(_existing(args.data)):
        try:
            feature, _ = mean_embed(r["words"], table)
        except NoKnownWords:
            log.warning("%s:%d: no known words, skipped", args.data, lineno)
            continue
        y = np.zeros(len(vocab))
        for t in r["tags"]:
            if t not in vocab.index:
                raise RecordError(f"{args.data}:{lineno}: tag {t!r} not in vocabulary")
            y[vocab.index[t]] = 1.0
        X.append(feature)
        Y.append(y)
    result = train_tag_predictor(np.array(X), np.array(Y), vocab.tags, cfg.hidden, cfg.lr,
                                 cfg.epochs, cfg.batch_size, full.seed)
    result.model.save(args.out)
    log.info("trained tag model: final loss %.5f after %d steps", result.loss, result.steps)


def cmd_summarize(args) -> None:
    cfg = _load_config(args).summarize
    image = imaging.load_image(_existing(args.image), "RGB")
    image_id, words = load_words(_existing(args.words))
    proposals = [Detection.from_record(r) for _, r in read_jsonl(_existing(args.proposals))]
    proposals = [d for d in proposals if d.image_id in (None, image_id)]
    model = TagPredictor.load(_existing(args.tag_model))
    table = EmbeddingTable.load(_existing(args.embeddings))
    if args.icon_backend == "file":
        if not args.classifier_probs:
            raise UsageError("--classifier-probs is required with --icon-backend file")
        backend = FileClassifier.load(_existing(args.classifier_probs))
    else:
        if not args.icons:
            raise UsageError("--icons is required with --icon-backend baseline")
        pool = synthgen.load_icon_manifest(_existing(args.icons))
        backend = BaselineClassifier([(i.image, i.tag) for i in pool], TagVocabulary(model.tags),
                                     cfg.temperature)
    summary = summarize(image, image_id, words, proposals, model, table, backend, args.k or cfg.k)
    out = {"schema_version": SCHEMA_VERSION, **summary.to_dict()}
    text = dumps(out) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.overlay:
        boxes = [(d.box, None, "proposal") for d in proposals]
        boxes += [(box, tag, "hashtag") for tag, (box, _, _) in summary.hashtags.items()]
        imaging.save_image(render.render_overlay(image, boxes), args.overlay)


def cmd_report(args) -> None:
    labels = args.labels or [Path(p).stem for p in args.reports]
    if len(labels) != len(args.reports):
        raise UsageError("--labels must name every report")
    rows = [(lab, json.loads(_existing(p).read_text())) for lab, p in zip(labels, args.reports)]
    fmt = args.format or ("html" if args.out.endswith(".html") else "md")
    Path(args.out).write_text(render.report_table(rows, fmt))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="iconforge", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", help="generate synthetic training windows")
    g.add_argument("--corpus", required=True)
    g.add_argument("--icons", required=True, help="icon manifest (JSONL)")
    g.add_argument("--params", help="TOML config")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--baseline", choices=synthgen.MODES[1:])
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int, default=1, help="0 = one per CPU")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("tile", help="render the 3-scale window pyramid")
    t.add_argument("--image", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--image-id")
    t.set_defaults(func=cmd_tile)

    b = sub.add_parser("propose-baseline", help="edge-blob proposals for every tile")
    b.add_argument("--tiles", nargs="+", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_propose_baseline)

    a = sub.add_parser("aggregate", help="merge per-tile detections into final proposals")
    a.add_argument("--dets", required=True)
    a.add_argument("--tiles", nargs="+", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--threshold", type=float)
    a.add_argument("--config")
    a.set_defaults(func=cmd_aggregate)

    e = sub.add_parser("eval", help="score proposals, hashtags or annotator consistency")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt")
    e.add_argument("--mode", choices=("proposals", "hashtags", "consistency"), default="proposals")
    e.add_argument("--report", required=True)
    e.add_argument("--iou", type=float)
    e.add_argument("--config")
    e.set_defaults(func=cmd_eval)

    tt = sub.add_parser("train-tags", help="fit the text-tag network")
    tt.add_argument("--data", required=True, help="JSONL {words, tags}")
    tt.add_argument("--embeddings", required=True)
    tt.add_argument("--vocab", required=True)
    tt.add_argument("--out", required=True)
    tt.add_argument("--config")
    tt.add_argument("--seed", type=int)
    tt.set_defaults(func=cmd_train_tags)

    s = sub.add_parser("summarize", help="text tags and visual hashtags for one infographic")
    s.add_argument("--image", required=True)
    s.add_argument("--words", required=True)
    s.add_argument("--proposals", required=True)
    s.add_argument("--tag-model", required=True)
    s.add_argument("--embeddings", required=True)
    s.add_argument("--icon-backend", choices=("file", "baseline"), required=True)
    s.add_argument("--classifier-probs")
    s.add_argument("--icons", help="icon manifest for the baseline backend")
    s.add_argument("--k", type=int)
    s.add_argument("--overlay")
    s.add_argument("--out")
    s.add_argument("--config")
    s.set_defaults(func=cmd_summarize)

    r = sub.add_parser("report", help="markdown/HTML table of eval reports")
    r.add_argument("--reports", nargs="+", required=True)
    r.add_argument("--labels", nargs="+")
    r.add_argument("--out", required=True)
    r.add_argument("--format", choices=("md", "html"))
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # usage errors and --help
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args.func(args)
    except UsageError as e:
        print(f"iconforge {args.command}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"iconforge {args.command}: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as e:
        print(f"iconforge {args.command}: invalid input: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
