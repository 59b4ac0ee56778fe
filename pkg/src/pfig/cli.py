from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .errors import PfigError
from .losses import C2FConfig, gradcheck, match, read_text_features, read_vector_jsonl, total_loss

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_CHECK_FAILED = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfig", description="Mixed forgery image and prompt generator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run the generator over a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--samples-per-pair", type=int)

    p = sub.add_parser("preview", help="render a montage for manifest entries")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ids", required=True, help="comma-separated sample ids")
    p.add_argument("--out", required=True)

    p = sub.add_parser("lint", help="check manifest records for consistency")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("losses", help="evaluate the coarse/fine objectives on embedding files")
    p.add_argument("--coarse", required=True, help="coarse image features (JSONL with id)")
    p.add_argument("--coarse-text", required=True, help="real/fake prompt features (prompt_index 0 and 1)")
    p.add_argument("--labels", required=True, help="JSONL of {id, label}")
    p.add_argument("--fine-image", required=True)
    p.add_argument("--fine-text", required=True)
    p.add_argument("--phi", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=1.0)

    p = sub.add_parser("match", help="match image features against the prompt vocabulary")
    p.add_argument("--image-features", required=True)
    p.add_argument("--text-features", required=True)
    p.add_argument("--mode", choices=("coarse", "fine"), default="coarse")

    p = sub.add_parser("gradcheck", help="compare analytic gradients with finite differences")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-5)

    p = sub.add_parser("fixture", help="write a synthetic real/fake dataset and config")
    p.add_argument("--out", required=True)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_generate(args) -> int:
    from .config import load_config
    from .pipeline import run

    cfg = load_config(args.config).with_overrides(
        seed=args.seed, workers=args.workers, samples_per_pair=args.samples_per_pair
    )
    report, _ = run(cfg)
    print(json.dumps(report.to_json()))
    return EXIT_OK


def _cmd_preview(args) -> int:
    from .preview import preview

    ids = [s for s in args.ids.split(",") if s]
    print(preview(args.manifest, ids, args.out))
    return EXIT_OK


def _cmd_lint(args) -> int:
    from .pipeline import lint_manifest

    problems = lint_manifest(args.manifest)
    for p in problems:
        print(p)
    if problems:
        return EXIT_CHECK_FAILED
    print("ok")
    return EXIT_OK


def _cmd_losses(args) -> int:
    ids, v_c = read_vector_jsonl(args.coarse, "id")
    l_c = read_text_features(args.coarse_text)
    label_of = {}
    with open(args.labels, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                label_of[rec["id"]] = int(rec["label"])
    missing = [i for i in ids if i not in label_of]
    if missing:
        raise PfigError(f"no label for ids {missing[:5]}")
    labels = np.array([label_of[i] for i in ids])
    _, v_f = read_vector_jsonl(args.fine_image, "id")
    l_f = read_text_features(args.fine_text)
    rep = total_loss(v_c, l_c, labels, v_f, l_f, C2FConfig(phi=args.phi, tau=args.tau))
    print(json.dumps({"coarse": rep.coarse, "fine": rep.fine, "total": rep.total}))
    return EXIT_OK


def _cmd_match(args) -> int:
    ids, feats = read_vector_jsonl(args.image_features, "id")
    text = read_text_features(args.text_features)
    for sample_id, feat in zip(ids, feats):
        m = match(feat, text, args.mode)
        out = {"id": sample_id, "prompt_index": m.index, "prompt": m.prompt.text, "similarity": m.similarity}
        if args.mode == "coarse":
            out["label"] = "real" if m.prompt.kind == "coarse_real" else "fake"
        else:
            out["region"] = m.prompt.region
            out["type"] = m.prompt.ftype.phrase
        print(json.dumps(out))
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    worst = gradcheck(np.random.default_rng(args.seed), trials=args.trials, n=args.n, d=args.d)
    ok = worst < args.tolerance
    print(json.dumps({"max_relative_error": worst, "tolerance": args.tolerance, "passed": ok}))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_fixture(args) -> int:
    from pathlib import Path

    from .synthetic import write_config, write_fixture

    root = Path(args.out)
    write_fixture(root / "data", pairs=args.pairs, seed=args.seed)
    print(write_config(root / "config.toml", root / "data", root / "out"))
    return EXIT_OK


COMMANDS = {
    "generate": _cmd_generate,
    "preview": _cmd_preview,
    "lint": _cmd_lint,
    "losses": _cmd_losses,
    "match": _cmd_match,
    "gradcheck": _cmd_gradcheck,
    "fixture": _cmd_fixture,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (PfigError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
