"""Drive the full CLI chain on a toy workspace; shared by the CLI and acceptance tests."""
import json
from pathlib import Path

from iconforge.cli import main
from iconforge.toy import TOY_WORDS

ARTIFACTS = (
    "gen/annotations.jsonl", "gen/manifest.json", "tiles/tiles.json", "dets.jsonl",
    "proposals.jsonl", "gt.jsonl", "eval.json", "summary.json",
)


def run(*argv):
    code = main([str(a) for a in argv])
    assert code == 0, f"{argv[0]} exited {code}"


def run_pipeline(ws: dict, out: Path, seed: int = 7, n: int = 4, workers: int = 1) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = out / "config.toml"
    cfg.write_text("[summarize]\nhidden = 32\nepochs = 10\nlr = 0.5\n")
    run("gen", "--corpus", ws["corpus"], "--icons", ws["icons"], "--n", n, "--out", out / "gen",
        "--seed", seed, "--workers", workers)
    first = json.loads((out / "gen/annotations.jsonl").read_text().splitlines()[0])
    image_id = first["image_id"]
    (out / "gt.jsonl").write_text(json.dumps(first) + "\n")
    run("tile", "--image", out / "gen" / first["image_path"], "--out", out / "tiles", "--image-id", image_id)
    run("propose-baseline", "--tiles", out / "tiles/tiles.json", "--out", out / "dets.jsonl")
    run("aggregate", "--dets", out / "dets.jsonl", "--tiles", out / "tiles/tiles.json",
        "--out", out / "proposals.jsonl", "--threshold", 0)
    run("eval", "--pred", out / "proposals.jsonl", "--gt", out / "gt.jsonl", "--report", out / "eval.json")
    run("train-tags", "--data", ws["train"], "--embeddings", ws["embeddings"], "--vocab", ws["vocab"],
        "--out", out / "tags.npz", "--config", cfg, "--seed", seed)
    tags = sorted({b["tag"] for b in first["boxes"]}) or ["music"]
    words = [w for t in tags for w in TOY_WORDS[t]] + ["the", "zzunknown"]
    (out / "words.json").write_text(json.dumps({"image_id": image_id, "words": words}))
    run("summarize", "--image", out / "gen" / first["image_path"], "--words", out / "words.json",
        "--proposals", out / "proposals.jsonl", "--tag-model", out / "tags.npz",
        "--embeddings", ws["embeddings"], "--icon-backend", "baseline", "--icons", ws["icons"],
        "--config", cfg, "--out", out / "summary.json", "--overlay", out / "overlay.png")
    return out
