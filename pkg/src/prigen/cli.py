"""Command-line pipeline: extract -> paths -> dataset -> train -> predict -> caption -> eval.

Data goes to files (``eval`` prints its JSON report to stdout unless ``--out``
is given); diagnostics go to stderr. Exit status is 0 on success, 1 for bad
input and 2 for internal errors. ``PRIGEN_LOG`` selects error, info or debug
logging.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .errors import PrigenError

log = logging.getLogger("prigen")

DEFAULT_SEED = 7


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise PrigenError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    return out


def _load_db(path):
    from .permdb import load_api_db, load_bundled_db
    return load_bundled_db() if path is None else load_api_db(path)


# -- extract ----------------------------------------------------------------

def _analyze_one(path, db, hops):
    """Worker body: returns (apk_id, records, error message)."""
    from .apkstat import analyze_apk
    name = Path(path).name
    try:
        result = analyze_apk(path, db, hops)
    except (PrigenError, OSError, ValueError) as exc:
        return name, None, f"{type(exc).__name__}: {exc}"
    records = [p.to_json() for p in result.prcs]
    for rec in records:
        rec["apk_id"] = name
    report = None
    if result.report is not None:
        report = {"apk_id": name, "package": result.manifest.package_name,
                  "undeclared_use": list(result.report.undeclared_use),
                  "unmatched_declaration": list(result.report.unmatched_declaration)}
    return name, (records, report), None


def _apk_inputs(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            found = sorted(q for q in p.iterdir() if q.suffix == ".apk" and q.is_file())
            if not found:
                raise UsageError(f"no .apk files in directory {p}")
            files.extend(found)
        elif p.is_file():
            files.append(p)
        else:
            raise UsageError(f"no such file: {p}")
    return files


def batch_extract(paths, db, hops=1, workers=1):
    """Analyse APKs, isolating per-file failures.

    Returns ``(records, reports, summary)`` with records sorted by apk_id.
    """
    files = _apk_inputs(paths)
    if workers > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_analyze_one, [str(f) for f in files],
                                    [db] * len(files), [hops] * len(files)))
    else:
        results = [_analyze_one(str(f), db, hops) for f in files]
    records, reports = [], []
    ok = failed = 0
    for name, payload, err in sorted(results, key=lambda r: r[0]):
        if err is not None:
            log.warning("skipping %s: %s", name, err)
            failed += 1
            continue
        ok += 1
        records.extend(payload[0])
        if payload[1] is not None:
            reports.append(payload[1])
    records.sort(key=lambda r: (r["apk_id"], r["class"], r["method"], r["descriptor"]))
    summary = {"apks_ok": ok, "apks_failed": failed, "prcs_total": len(records)}
    return records, reports, summary


def cmd_extract(args):
    if args.hops < 1:
        raise UsageError("--hops must be >= 1")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    db = _load_db(args.db)
    records, reports, summary = batch_extract(args.apks, db, args.hops, args.workers)
    _write_jsonl(args.out, records)
    if args.permissions_out:
        _write_jsonl(args.permissions_out, reports)
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, sort_keys=True) + "\n")
    log.info("extract: %s", json.dumps(summary, sort_keys=True))
    if summary["apks_ok"] == 0:
        log.error("no APK could be analysed")
        return 1
    return 0


# -- paths / dataset -------------------------------------------------------

def cmd_paths(args):
    from .corpus import examples_to_lines, read_corpus, write_lines
    examples = read_corpus(args.input)
    lines, locs = [], []
    for ex, line in examples_to_lines(examples, seed=args.seed, max_length=args.max_length,
                                      max_width=args.max_width, max_contexts=args.max_contexts):
        lines.append(line)
        locs.append(str(ex.loc))
    write_lines(args.out, lines)
    if args.loc_out:
        write_lines(args.loc_out, locs)
    log.info("paths: %d of %d examples written", len(lines), len(examples))
    return 0


def cmd_dataset(args):
    from . import corpus
    if args.action == "synth":
        from .synthetic import synthetic_corpus
        corpus.write_corpus(args.out, synthetic_corpus(args.n, args.seed))
        return 0
    if args.action == "dedup":
        kept, removed = corpus.dedup(corpus.read_corpus(args.input), args.shingle, args.threshold)
        corpus.write_corpus(args.out, kept)
        for ex, witness in removed:
            log.info("duplicate %s of %s", ex.example_id, witness.example_id)
        log.info("dedup: kept %d, removed %d", len(kept), len(removed))
        return 0
    if args.action == "filter":
        examples = corpus.read_corpus(args.input)
        kept = corpus.filter_obfuscated(examples, args.max_obf)
        corpus.write_corpus(args.out, kept)
        log.info("filter: kept %d of %d", len(kept), len(examples))
        return 0
    # split: works on any line-oriented file (corpus JSONL or dataset lines)
    try:
        fractions = [float(x) for x in args.split.split(",")]
    except ValueError as exc:
        raise UsageError(f"--split expects three comma-separated numbers: {exc}") from exc
    if len(fractions) != 3:
        raise UsageError("--split expects A,B,C")
    spec = corpus.SplitSpec(*fractions, seed=args.seed)
    lines = [ln for ln in corpus.read_lines(args.input) if ln.strip()]
    parts = corpus.split(lines, spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = Path(args.input).suffix or ".txt"
    for name, part in zip(("train", "val", "test"), parts):
        corpus.write_lines(out / f"{name}{suffix}", part)
    log.info("split: %s", " ".join(f"{n}={len(p)}" for n, p in zip(("train", "val", "test"), parts)))
    return 0


# -- model ------------------------------------------------------------------

def _dataset_files(data):
    p = Path(data)
    if p.is_file():
        return p, None
    if not p.is_dir():
        raise UsageError(f"no such file or directory: {p}")
    train = p / "train.txt"
    val = p / "val.txt"
    if not train.is_file():
        raise UsageError(f"{p} has no train.txt")
    return train, (val if val.is_file() and val.stat().st_size else None)


def cmd_train(args):
    from .corpus import read_dataset
    from .nmt import HyperParams, save, train
    hyper = HyperParams(embedding_size=args.emb, encoder_state_size=args.enc,
                        decoder_state_size=args.dec, max_target_parts=args.max_target,
                        max_contexts=args.max_contexts, beam_width=args.beam,
                        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch,
                        seed=args.seed, dropout_keep=args.dropout_keep)
    train_file, val_file = _dataset_files(args.data)
    train_set = read_dataset(train_file)
    val_set = read_dataset(val_file) if val_file else []
    report = train(train_set, val_set, hyper)
    save(report.model, args.out)
    if args.loss_out:
        rows = ["epoch\ttrain_loss\tval_loss"]
        for i, loss in enumerate(report.losses):
            val = f"{report.val_losses[i]:.6f}" if report.val_losses else ""
            rows.append(f"{i + 1}\t{loss:.6f}\t{val}")
        Path(args.loss_out).write_text("\n".join(rows) + "\n")
    if args.loss_figure:
        from .plotting import plot_losses
        plot_losses(report.losses, args.loss_figure, report.val_losses)
    return 0


def cmd_predict(args):
    from .corpus import read_dataset, write_lines
    from .nmt import load, predict_tokens
    model = load(args.model)
    data = read_dataset(args.input)
    beam = model.hyper.beam_width if args.beam is None else args.beam
    if beam < 1:
        raise UsageError("--beam must be >= 1")
    hyps = [" ".join(predict_tokens(model, ctx, beam)) for _, ctx in data]
    write_lines(args.out, hyps)
    if args.ref_out:
        write_lines(args.ref_out, [" ".join(t) for t, _ in data])
    return 0


def _source_index(path):
    index = {}
    for rec in _read_jsonl(path):
        try:
            key = (rec["class"], rec["method"], rec.get("descriptor"))
            index[key] = rec["source"]
            index.setdefault((rec["class"], rec["method"], None), rec["source"])
        except (KeyError, TypeError) as exc:
            raise PrigenError(f"{path}: source records need class, method, source") from exc
    return index


def _record_apis(rec, db):
    from .permdb import ApiSpec, lookup
    apis = []
    for a in rec.get("apis", []):
        spec = lookup(db, a["class"], a["method"], a.get("descriptor"))
        if spec is None:
            spec = ApiSpec(a["class"], a["method"], a.get("descriptor"), a["description"],
                           a["sensitive_info"], tuple(a["permissions"]), a["group"])
        apis.append(spec)
    return apis


def cmd_caption(args):
    from .caption import assemble
    from .corpus import attach_contexts, make_example
    from .errors import JavaSyntaxError
    from .nmt import load, predict_tokens
    model = load(args.model)
    db = _load_db(args.db)
    sources = _source_index(args.sources) if args.sources else {}
    out = []
    for rec in _read_jsonl(args.prcs):
        try:
            apis = _record_apis(rec, db)
        except (KeyError, TypeError) as exc:
            raise PrigenError(f"{args.prcs}: malformed PRCS record ({exc})") from exc
        src = sources.get((rec.get("class"), rec.get("method"), rec.get("descriptor")))
        if src is None:
            src = sources.get((rec.get("class"), rec.get("method"), None))
        tokens = []
        rec = dict(rec)
        if src is None:
            rec["no_source"] = True
        else:
            try:
                ex = attach_contexts(make_example(rec.get("method", ""), src),
                                     max_contexts=model.hyper.max_contexts, seed=args.seed)
                tokens = predict_tokens(model, ex.contexts, args.beam)
                rec["no_source"] = False
            except JavaSyntaxError as exc:
                log.warning("%s.%s: source not captionable (%s)", rec.get("class"),
                            rec.get("method"), exc)
                rec["no_source"] = True
        caption = assemble(tokens, apis)
        rec["code_caption"] = caption.code_caption
        rec["privacy_caption"] = caption.full_text
        out.append(rec)
    _write_jsonl(args.out, out)
    return 0


def cmd_eval(args):
    from .corpus import read_lines
    from .metrics import evaluate, evaluate_by_loc
    hyps = [ln.split() for ln in read_lines(args.hyp)]
    refs = [ln.split() for ln in read_lines(args.ref)]
    if len(hyps) != len(refs):
        raise UsageError(f"{args.hyp} has {len(hyps)} lines but {args.ref} has {len(refs)}")
    if not refs:
        raise UsageError("nothing to evaluate")
    text = json.dumps(evaluate(hyps, refs).to_json(), sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.loc:
        try:
            locs = [int(x) for x in read_lines(args.loc)]
        except ValueError as exc:
            raise UsageError(f"{args.loc}: expected one integer per line") from exc
        buckets = evaluate_by_loc(hyps, refs, locs)
        if args.by_loc_out:
            rows = ["bucket\tpairs\tbleu4\trouge_p\trouge_r\trouge_f1"]
            for k, rep in buckets.items():
                j = rep.to_json()
                rows.append(f"{k}\t{j['pairs']}\t{j['bleu4']:.2f}\t{j['rouge_p']:.2f}\t"
                            f"{j['rouge_r']:.2f}\t{j['rouge_f1']:.2f}")
            Path(args.by_loc_out).write_text("\n".join(rows) + "\n")
        if args.figure:
            from .plotting import plot_loc_buckets
            plot_loc_buckets(buckets, args.figure)
    elif args.figure or args.by_loc_out:
        raise UsageError("--figure and --by-loc-out need --loc")
    return 0


# -- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prigen", description="Privacy captions for permission-requiring code.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("extract", help="find permission-requiring code segments in APKs")
    s.add_argument("apks", nargs="+", help="APK files or directories of APKs")
    s.add_argument("--db", help="API knowledge base (default: bundled)")
    s.add_argument("--hops", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--permissions-out", help="per-APK manifest cross-check (JSON Lines)")
    s.add_argument("--summary", help="write the batch summary JSON here")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("paths", help="Java methods (corpus JSONL) to path-context lines")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--max-length", type=int, default=9)
    s.add_argument("--max-width", type=int, default=2)
    s.add_argument("--max-contexts", type=int, default=200)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--loc-out", help="write each kept example's line count here")
    s.set_defaults(func=cmd_paths)

    s = sub.add_parser("dataset", help="synthesize, deduplicate, filter or split corpora")
    s.add_argument("action", choices=["synth", "dedup", "filter", "split"])
    s.add_argument("--in", dest="input")
    s.add_argument("--out")
    s.add_argument("--out-dir")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--shingle", type=int, default=5)
    s.add_argument("--threshold", type=float, default=0.8)
    s.add_argument("--max-obf", type=float, default=0.5)
    s.add_argument("--split", default="0.9,0.1,0")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(func=cmd_dataset)

    s = sub.add_parser("train", help="train the caption model")
    s.add_argument("--data", required=True, help="directory with train.txt [val.txt], or a file")
    s.add_argument("--out", required=True)
    s.add_argument("--emb", type=int, default=64)
    s.add_argument("--enc", type=int, default=64)
    s.add_argument("--dec", type=int, default=128)
    s.add_argument("--max-target", type=int, default=37)
    s.add_argument("--max-contexts", type=int, default=200)
    s.add_argument("--epochs", type=int, default=10)
    s.add_argument("--batch", type=int, default=32)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--dropout-keep", type=float, default=0.75)
    s.add_argument("--beam", type=int, default=1, help="default beam stored in the model")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--loss-out", help="TSV of per-epoch losses")
    s.add_argument("--loss-figure", help="PNG loss curve")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="caption path-context lines")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--beam", type=int)
    s.add_argument("--ref-out", help="also write the reference captions, aligned")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("caption", help="assemble privacy captions for PRCS records")
    s.add_argument("--model", required=True)
    s.add_argument("--prcs", required=True)
    s.add_argument("--db")
    s.add_argument("--sources", help="JSONL of {class, method, descriptor, source}")
    s.add_argument("--out", required=True)
    s.add_argument("--beam", type=int, default=1)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(func=cmd_caption)

    s = sub.add_parser("eval", help="BLEU-4 and ROUGE-L over aligned caption files")
    s.add_argument("--hyp", required=True)
    s.add_argument("--ref", required=True)
    s.add_argument("--out")
    s.add_argument("--loc", help="line counts aligned with the pairs")
    s.add_argument("--by-loc-out", help="TSV of per-bucket scores")
    s.add_argument("--figure", help="PNG of per-bucket scores")
    s.set_defaults(func=cmd_eval)
    return p


_REQUIRED = {
    "synth": ("out",), "dedup": ("input", "out"), "filter": ("input", "out"),
    "split": ("input", "out_dir"),
}


def _configure_logging():
    level = os.environ.get("PRIGEN_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise UsageError(f"PRIGEN_LOG must be one of {sorted(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level], stream=sys.stderr, force=True,
                        format="%(levelname)s %(name)s: %(message)s")


def run(argv=None) -> int:
    try:
        _configure_logging()
        args = build_parser().parse_args(argv)
        if args.command == "dataset":
            missing = [f for f in _REQUIRED[args.action] if getattr(args, f) is None]
            if missing:
                flags = ", ".join("--" + m.replace("input", "in").replace("_", "-") for m in missing)
                raise UsageError(f"dataset {args.action} needs {flags}")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PrigenError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    except Exception:
        log.exception("internal error")
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
