"""Command-line pipeline: train, evaluate, predict, similarity, distance, sweep.

Every run is reproducible from a config + seed: outputs are pure functions
of the input files and flags, and reruns produce byte-identical delimited
artifacts. Exit codes: 0 success, 2 config error, 3 data error, 4 runtime
error; error messages name the failing stage.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .analysis import SimilarityConfig, distance_matrix, overlap_matrix
from .corpus import Corpus, SplitSpec, load_corpus, split_train_test
from .errors import ConfigError, DataError
from .evaluation import errors_to_tsv, evaluate_model, metrics_to_tsv, render_report
from .features import FEATURE_SET_NAMES, FeatureSpec, feature_set_from_name
from .svm import TrainConfig, grid_search, load_model, save_model, train_ovr

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

THREADS_ENV = "NEARLANG_THREADS"

MODEL_FILENAME = "model.nlm"
GRID_REPORT_FILENAME = "grid_report.tsv"


class _Stage:
    """Names the pipeline stage currently running, for error messages."""

    def __init__(self):
        self.name = "startup"

    def set(self, name: str) -> None:
        self.name = name


def _load_config_file(path: str | Path) -> dict[str, str]:
    """Flat `key = value` format; '#' starts a comment; blank lines ignored."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _resolve(flag_value, config: Mapping[str, str], key: str, default, cast):
    if flag_value is not None:
        return flag_value
    if key in config:
        raw = config[key]
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: cannot parse {raw!r}") from exc
    return default


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_c_grid(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _parse_orders(raw: str) -> frozenset[int]:
    return frozenset(int(tok) for tok in raw.replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs: corpus source, feature set, and sub-configs."""

    corpus_source: str | dict[str, str] | None
    corpus_format: str
    feature_set_name: str
    feature_spec: FeatureSpec | None
    split: SplitSpec
    train: TrainConfig
    similarity: SimilarityConfig
    out_dir: Path
    threads: int

    def load(self, stage: _Stage, role: str = "corpus") -> Corpus:
        stage.set(f"loading {role}")
        if self.corpus_source is None:
            raise ConfigError("no corpus given: use --corpus/--lang or config keys corpus/lang.*")
        return load_corpus(self.corpus_source, format=self.corpus_format)


def _resolve_corpus_source(args, config: Mapping[str, str], role: str = "corpus"):
    lang_pairs: list[tuple[str, str]] = []
    for entry in getattr(args, "lang", None) or []:
        if "=" not in entry:
            raise ConfigError(f"--lang expects NAME=PATH, got {entry!r}")
        name, _, path = entry.partition("=")
        lang_pairs.append((name.strip(), path.strip()))
    if not lang_pairs:
        for key, value in config.items():
            if key.startswith("lang."):
                lang_pairs.append((key[len("lang.") :], value))

    corpus_path = _resolve(
        getattr(args, role, None) or getattr(args, "corpus", None), config, "corpus", None, str
    )
    fmt = _resolve(getattr(args, "format", None), config, "format", None, str)

    if lang_pairs and corpus_path:
        raise ConfigError("give either a corpus path or per-language files, not both")
    if lang_pairs:
        return dict(lang_pairs), "lines"
    return corpus_path, fmt or "tsv"


def _resolve_feature_spec(args, config: Mapping[str, str]) -> tuple[str, FeatureSpec]:
    char_orders = _resolve(getattr(args, "char_orders", None), config, "char_orders", None, _parse_orders)
    word_orders = _resolve(getattr(args, "word_orders", None), config, "word_orders", None, _parse_orders)
    if char_orders or word_orders:
        spec = FeatureSpec(char_orders=char_orders or frozenset(), word_orders=word_orders or frozenset())
        return "custom", spec
    name = _resolve(getattr(args, "feature_set", None), config, "feature_set", "C3", str)
    return name, feature_set_from_name(name)


def resolve_run_config(args, config: Mapping[str, str], role: str = "corpus") -> RunConfig:
    """Merge flags over config-file keys into one RunConfig (flags win)."""
    source, fmt = _resolve_corpus_source(args, config, role)
    name, spec = _resolve_feature_spec(args, config)
    seed = _resolve(getattr(args, "seed", None), config, "seed", 0, int)
    stratified = (
        False
        if getattr(args, "no_stratify", False)
        else _resolve(None, config, "stratified", True, _parse_bool)
    )
    split = SplitSpec(
        train_fraction=_resolve(getattr(args, "train_fraction", None), config, "train_fraction", 0.8, float),
        seed=seed,
        stratified=stratified,
    )
    train = TrainConfig(
        c_grid=_resolve(getattr(args, "c_grid", None), config, "c_grid", (0.01, 0.1, 1.0, 10.0, 100.0), _parse_c_grid),
        k_folds=_resolve(getattr(args, "k_folds", None), config, "k_folds", 5, int),
        seed=seed,
        tolerance=_resolve(getattr(args, "tolerance", None), config, "tolerance", 1e-4, float),
        max_epochs=_resolve(getattr(args, "max_epochs", None), config, "max_epochs", 1000, int),
    )
    pair_sample = _resolve(getattr(args, "pair_sample", None), config, "pair_sample", None, int)
    similarity = SimilarityConfig(
        sample_size=_resolve(getattr(args, "sample_size", None), config, "sample_size", 10_000, int),
        seed=seed,
        exact_pairs=pair_sample is None,
        pair_sample=pair_sample if pair_sample is not None else 100_000,
    )
    out = Path(_resolve(args.out, config, "out", ".", str))
    env_default = os.environ.get(THREADS_ENV)
    threads = _resolve(args.threads, config, "threads", None, int)
    if threads is None:
        threads = int(env_default) if env_default else 1
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    return RunConfig(
        corpus_source=source,
        corpus_format=fmt,
        feature_set_name=name,
        feature_spec=spec,
        split=split,
        train=train,
        similarity=similarity,
        out_dir=out,
        threads=threads,
    )


def _ensure_out(rc: RunConfig) -> Path:
    rc.out_dir.mkdir(parents=True, exist_ok=True)
    return rc.out_dir


def _corpus_to_tsv(corpus: Corpus) -> str:
    return "".join(f"{s.label}\t{s.text}\n" for s in corpus.sentences)


def _grid_report_tsv(best_c: float, per_c: Sequence[tuple[float, float]]) -> str:
    lines = ["# nearlang grid report v1", f"# best_c={best_c!r}", "c\tmean_cv_accuracy"]
    for c, acc in per_c:
        lines.append(f"{c!r}\t{acc!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def _cmd_train(args, stage: _Stage) -> int:
    stage.set("reading configuration")
    config = _load_config_file(args.config) if args.config else {}
    rc = resolve_run_config(args, config)
    out = _ensure_out(rc)

    corpus = rc.load(stage)
    stage.set("splitting corpus")
    train, test = split_train_test(corpus, rc.split)
    (out / "train.tsv").write_text(_corpus_to_tsv(train), encoding="utf-8")
    (out / "test.tsv").write_text(_corpus_to_tsv(test), encoding="utf-8")

    stage.set("grid search")
    best_c, per_c = grid_search(train, rc.feature_spec, rc.train)
    (out / GRID_REPORT_FILENAME).write_text(_grid_report_tsv(best_c, per_c), encoding="utf-8")
    from .figures import save_grid_curve

    save_grid_curve(per_c, best_c, out / "grid_curve.png")

    stage.set("final training")
    model = train_ovr(train, rc.feature_spec, best_c, rc.train)
    stage.set("saving model")
    save_model(model, out / MODEL_FILENAME)

    print(f"feature set: {rc.feature_set_name}")
    print(f"best C: {best_c:g}")
    for c, acc in per_c:
        print(f"  C={c:g}: mean CV accuracy {acc:.4f}")
    print(f"model: {out / MODEL_FILENAME}")
    return EXIT_OK


def _cmd_evaluate(args, stage: _Stage) -> int:
    stage.set("reading configuration")
    config = _load_config_file(args.config) if args.config else {}
    rc = resolve_run_config(args, config, role="test")
    out = _ensure_out(rc)
    stage.set("loading model")
    model = load_model(args.model)
    test = rc.load(stage, role="test corpus")

    stage.set("evaluating")
    report, errors = evaluate_model(model, test)

    stage.set("writing reports")
    (out / "metrics.tsv").write_text(metrics_to_tsv(report), encoding="utf-8")
    (out / "confusion.tsv").write_text(report.confusion.to_tsv(), encoding="utf-8")
    (out / "errors.tsv").write_text(errors_to_tsv(errors, model.classes), encoding="utf-8")
    human = render_report(report)
    (out / "report.txt").write_text(human, encoding="utf-8")
    from .figures import save_confusion_heatmap

    save_confusion_heatmap(report.confusion, out / "confusion.png")
    print(human, end="")
    return EXIT_OK


def _cmd_predict(args, stage: _Stage) -> int:
    stage.set("reading configuration")
    config = _load_config_file(args.config) if args.config else {}
    resolve_run_config(args, config)
    stage.set("loading model")
    model = load_model(args.model)

    stage.set("predicting")
    from .corpus import normalize_sentence
    from .features import vectorize
    from .svm import decision_values

    if args.input:
        try:
            handle = open(args.input, "r", encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read input {args.input}: {exc}") from exc
    else:
        handle = sys.stdin
    try:
        for line in handle:
            sentence = line.rstrip("\n")
            if not sentence.strip():
                continue
            try:
                vec = vectorize(normalize_sentence(sentence), model.feature_index, model.feature_spec)
            except DataError:
                vec = {}
            scores = decision_values(model, vec)
            label = model.classes[int(np.argmax(scores))]
            extra = ""
            if args.scores:
                extra = "\t" + "\t".join(
                    f"{cls}={val:.6g}" for cls, val in zip(model.classes, scores)
                )
            print(f"{label}\t{sentence}{extra}")
    finally:
        if handle is not sys.stdin:
            handle.close()
    return EXIT_OK


def _cmd_similarity(args, stage: _Stage) -> int:
    stage.set("reading configuration")
    config = _load_config_file(args.config) if args.config else {}
    rc = resolve_run_config(args, config)
    out = _ensure_out(rc)
    corpus = rc.load(stage)

    stage.set("computing lexical overlap")
    matrix = overlap_matrix(corpus, rc.similarity)
    (out / "overlap.tsv").write_text(matrix.to_tsv(), encoding="utf-8")
    from .figures import save_overlap_heatmap

    save_overlap_heatmap(matrix, out / "overlap.png")
    print(matrix.to_tsv(), end="")
    return EXIT_OK


def _cmd_distance(args, stage: _Stage) -> int:
    stage.set("reading configuration")
    config = _load_config_file(args.config) if args.config else {}
    rc = resolve_run_config(args, config)
    out = _ensure_out(rc)
    corpus = rc.load(stage)
    variant = args.variant.replace("-", "_")

    stage.set("computing edit distances")
    matrix = distance_matrix(corpus, rc.similarity, variant)
    filename = f"distance_{variant}.tsv"
    (out / filename).write_text(matrix.to_tsv(), encoding="utf-8")
    from .figures import save_distance_heatmap

    save_distance_heatmap(matrix, out / f"distance_{variant}.png")
    print(matrix.to_tsv(), end="")
    return EXIT_OK


def _cmd_sweep(args, stage: _Stage) -> int:
    stage.set("reading configuration")
    config = _load_config_file(args.config) if args.config else {}
    rc = resolve_run_config(args, config)
    out = _ensure_out(rc)
    corpus = rc.load(stage)

    stage.set("splitting corpus")
    train, test = split_train_test(corpus, rc.split)

    rows = []
    for name in FEATURE_SET_NAMES:
        stage.set(f"sweep: {name}")
        print(f"[sweep] {name} ...", file=sys.stderr)
        spec = feature_set_from_name(name)
        best_c, _per_c = grid_search(train, spec, rc.train)
        model = train_ovr(train, spec, best_c, rc.train)
        report, _errors = evaluate_model(model, test)
        macro_p = float(np.mean([m.precision for m in report.per_class.values()]))
        macro_r = float(np.mean([m.recall for m in report.per_class.values()]))
        rows.append((name, macro_p, macro_r, report.macro_f1, report.accuracy * 100, best_c))

    stage.set("writing sweep report")
    lines = ["feature_set\tprecision\trecall\tf1\taccuracy\tbest_c"]
    for name, p, r, f1, acc, best_c in rows:
        lines.append(f"{name}\t{p:.2f}\t{r:.2f}\t{f1:.2f}\t{acc:.3f}\t{best_c:g}")
    (out / "sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    from .figures import save_sweep_bars

    save_sweep_bars([r[0] for r in rows], [r[4] for r in rows], out / "sweep.png")
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing and entry point.
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file; flags override its keys")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"cap on internal parallelism (default ${THREADS_ENV} or 1); "
                             "outputs do not depend on it")
    parser.add_argument("--out", default=None, help="output directory (default .)")


def _add_corpus_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", default=None, help="corpus file: label<TAB>sentence per line")
    parser.add_argument("--format", default=None, choices=("tsv", "lines"), help="corpus file format")
    parser.add_argument("--lang", action="append", default=None, metavar="NAME=PATH",
                        help="per-language sentence file (repeatable; implies lines format)")


def _add_train_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None, help="seed for split, folds, and sampling")
    parser.add_argument("--no-stratify", dest="no_stratify", action="store_true", default=False)
    parser.add_argument("--c-grid", dest="c_grid", type=_parse_c_grid, default=None,
                        metavar="C1,C2,...", help="regularization grid (default 0.01,0.1,1,10,100)")
    parser.add_argument("--k-folds", dest="k_folds", type=int, default=None)
    parser.add_argument("--tolerance", type=float, default=None)
    parser.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nearlang",
        description="Identify closely related, same-script languages and measure their similarity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="split, grid-search C, train, and save a model")
    _add_common(p_train)
    _add_corpus_args(p_train)
    _add_train_args(p_train)
    p_train.add_argument("--feature-set", dest="feature_set", default=None,
                         help=f"one of: {', '.join(FEATURE_SET_NAMES)} (default C3)")
    p_train.add_argument("--char-orders", dest="char_orders", type=_parse_orders, default=None,
                         help="raw character n-gram orders, e.g. 2,3,4 (overrides --feature-set)")
    p_train.add_argument("--word-orders", dest="word_orders", type=_parse_orders, default=None,
                         help="raw word n-gram orders, e.g. 1,2 (overrides --feature-set)")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a saved model on a test corpus")
    _add_common(p_eval)
    _add_corpus_args(p_eval)
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--test", default=None, help="test corpus file (alias for --corpus)")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_pred = sub.add_parser("predict", help="label sentences from a file or stdin")
    _add_common(p_pred)
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--input", default=None, help="input file (default stdin), one sentence per line")
    p_pred.add_argument("--scores", action="store_true", help="append per-class decision values")
    p_pred.set_defaults(func=_cmd_predict)

    p_sim = sub.add_parser("similarity", help="lexical overlap matrix between language vocabularies")
    _add_common(p_sim)
    _add_corpus_args(p_sim)
    p_sim.add_argument("--sample-size", dest="sample_size", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(func=_cmd_similarity)

    p_dist = sub.add_parser("distance", help="average edit-distance matrix between vocabularies")
    _add_common(p_dist)
    _add_corpus_args(p_dist)
    p_dist.add_argument("--variant", choices=("overall", "length-controlled"), default="overall")
    p_dist.add_argument("--sample-size", dest="sample_size", type=int, default=None)
    p_dist.add_argument("--seed", type=int, default=None)
    p_dist.add_argument("--pair-sample", dest="pair_sample", type=int, default=None,
                        help="estimate each average from this many sampled pairs instead of all pairs")
    p_dist.set_defaults(func=_cmd_distance)

    p_sweep = sub.add_parser("sweep", help="train and evaluate every named feature set")
    _add_common(p_sweep)
    _add_corpus_args(p_sweep)
    _add_train_args(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    stage = _Stage()
    try:
        return args.func(args, stage)
    except ConfigError as exc:
        print(f"nearlang: config error during {stage.name}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"nearlang: data error during {stage.name}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - safety net
        print(f"nearlang: error during {stage.name}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
