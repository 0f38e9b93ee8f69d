"""Command line interface: ``panfis-fuse {synth,train,fuse,predict,eval,bench}``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .data import CsvSchema, Dataset, SynthConfig, load_csv, synth_rss, write_csv
from .exceptions import ChunkError, CsvParseError, FormatError, NumericError, UsageError
from .fusion import CRITERIA, MergeConfig, fuse
from .inference import evaluate, predict_labels
from .learner import LearnerConfig
from .model_io import load_model, save_model
from .orchestrator import BACKENDS, train_scalable, train_single
from .report import comparison, format_report

EXIT_USAGE = 2
EXIT_FAILURE = 3

log = logging.getLogger("panfis_fuse")


class StageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (UsageError, FormatError, CsvParseError, OSError):
        raise
    except (NumericError, ChunkError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def _add_csv_flags(p):
    p.add_argument("--label-base", type=int, choices=(0, 1), default=0)
    p.add_argument("--skip-header", action="store_true")


def _add_learner_flags(p):
    g = p.add_argument_group("learner")
    g.add_argument("--eps-coverage", type=float, default=0.135)
    g.add_argument("--kerr", type=float, default=0.01)
    g.add_argument("--sker", type=float, default=0.8)
    g.add_argument("--init-spread", type=float, default=None)
    g.add_argument("--rls-init", type=float, default=1e5)
    g.add_argument("--prune-every", type=int, default=50)
    g.add_argument("--merge-every", type=int, default=50)


def _add_merge_flags(p):
    g = p.add_argument_group("fusion")
    g.add_argument("--thr", type=float, default=0.8)
    g.add_argument("--criterion", choices=CRITERIA, default="and")
    g.add_argument("--max-passes", type=int, default=1000)


def _add_parallel_flags(p):
    p.add_argument("--n-jobs", type=int, default=None)
    p.add_argument("--backend", choices=BACKENDS, default="process")


def _learner_cfg(a):
    return LearnerConfig(
        eps_coverage=a.eps_coverage, kerr=a.kerr, sker=a.sker, thr=a.thr,
        init_spread=a.init_spread, rls_init=a.rls_init,
        prune_every=a.prune_every, merge_every=a.merge_every,
    )


def _merge_cfg(a, rls_init=1e5):
    return MergeConfig(a.thr, a.max_passes, a.criterion, rls_init)


def _schema(a):
    return CsvSchema(label_base=a.label_base, skip_header=a.skip_header)


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_synth(a):
    cfg = SynthConfig(n=a.n, classes=a.classes, sigma=a.sigma, drift_rate=a.drift_rate, seed=a.seed)
    data = synth_rss(cfg)
    header = [f"x{i}" for i in range(data.p)] + ["label"] if a.header else None
    write_csv(a.out, data, label_base=a.label_base, header=header)
    return 0


def _train(a, data, test=None):
    cfg = _learner_cfg(a)
    if a.partitions is None:
        return _stage("train", train_single, data, cfg, test=test)
    mcfg = _merge_cfg(a, cfg.rls_init)
    return _stage("train", train_scalable, data, a.partitions, cfg, mcfg,
                  n_jobs=a.n_jobs, backend=a.backend, test=test)


def cmd_train(a):
    data = load_csv(a.data, _schema(a))
    test = load_csv(a.test, _schema(a)) if a.test else None
    model, report = _train(a, data, test)
    save_model(model, a.model)
    name = "single" if a.partitions is None else "scalable"
    if a.report:
        _write_text(a.report, format_report({name: report}))
    return 0


def cmd_fuse(a):
    bases = [load_model(path) for path in a.models]
    model, freport = _stage("fuse", fuse, bases, _merge_cfg(a))
    save_model(model, a.out)
    lines = [
        "[fuse]",
        f"rules_before={freport.rules_before}",
        f"rules_after={freport.rules_after}",
        f"merge_events={len(freport.merge_events)}",
        f"fusion_passes={freport.passes}",
        f"fusion_converged={str(freport.converged).lower()}",
    ]
    if a.report:
        _write_text(a.report, "\n".join(lines) + "\n")
    if not freport.converged:
        log.warning(freport.warning)
    return 0


def cmd_predict(a):
    model = load_model(a.model)
    if a.labeled:
        X = load_csv(a.data, _schema(a)).X
    else:
        X = np.loadtxt(a.data, delimiter=",", ndmin=2, skiprows=1 if a.skip_header else 0)
    labels = _stage("predict", predict_labels, model, X) + a.label_base
    _write_text(a.out, "".join(f"{int(v)}\n" for v in labels))
    return 0


def cmd_eval(a):
    model = load_model(a.model)
    data = load_csv(a.data, _schema(a))
    m = _stage("eval", evaluate, model, data.X, data.y)
    lines = ["[eval]", f"n={m.n}", f"accuracy={m.accuracy:.6f}"]
    lines += [f"confusion.{i}=" + ",".join(str(int(v)) for v in row) for i, row in enumerate(m.confusion)]
    _write_text(a.out, "\n".join(lines) + "\n")
    return 0


def cmd_bench(a):
    if a.data:
        data = load_csv(a.data, _schema(a))
        cut = len(data) - a.n_test if a.n_test else int(round(0.7 * len(data)))
        train, test = data.slice(0, cut), data.slice(cut, len(data))
    else:
        data = synth_rss(SynthConfig(n=a.n_train + a.n_test, sigma=a.sigma, drift_rate=a.drift_rate, seed=a.seed))
        train, test = data.slice(0, a.n_train), data.slice(a.n_train, len(data))
    cfg = _learner_cfg(a)
    single_model, single = _stage("bench.single", train_single, train, cfg, test=test)
    scal_model, scalable = _stage(
        "bench.scalable", train_scalable, train, a.partitions, cfg, _merge_cfg(a, cfg.rls_init),
        n_jobs=a.n_jobs, backend=a.backend, test=test,
    )
    text = format_report({"single": single, "scalable": scalable}, comparison(single, scalable))
    _write_text(a.report, text)
    if a.report not in (None, "-"):
        sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="panfis-fuse", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic RSS-like CSV")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--drift-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label-base", type=int, choices=(0, 1), default=0)
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model (single pass, or --partitions P)")
    p.add_argument("data")
    p.add_argument("--model", required=True)
    p.add_argument("--partitions", type=int, default=None)
    p.add_argument("--test", default=None)
    p.add_argument("--report", default=None)
    _add_csv_flags(p)
    _add_learner_flags(p)
    _add_merge_flags(p)
    _add_parallel_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("fuse", help="merge several model files into one")
    p.add_argument("models", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    _add_merge_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("predict", help="predict labels for a CSV")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--labeled", action="store_true", help="last CSV column is a label to ignore")
    p.add_argument("--out", default="-")
    _add_csv_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy and confusion matrix on a labelled CSV")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--out", default="-")
    _add_csv_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="single vs scalable comparison")
    p.add_argument("--data", default=None, help="labelled CSV; synthetic data when omitted")
    p.add_argument("--n-train", type=int, default=200000)
    p.add_argument("--n-test", type=int, default=83100)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--drift-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--partitions", type=int, default=50)
    p.add_argument("--report", default="-")
    _add_csv_flags(p)
    _add_learner_flags(p)
    _add_merge_flags(p)
    _add_parallel_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except StageError as exc:
        print(f"panfis-fuse: numeric failure in stage {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (UsageError, FormatError, CsvParseError, OSError, ValueError) as exc:
        print(f"panfis-fuse {a.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
