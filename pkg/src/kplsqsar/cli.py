"""Batch command-line front end: search, fit, predict, descriptors, gen-synthetic.

Exit statuses: 0 success, 1 usage or configuration error, 2 data or I/O
error, 3 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

from . import descriptors as desc
from .dataset import SCALING_MODES, Dataset, join_features, load_table, write_table
from .errors import ConfigError, DataError, EarlyStopWarning, KplsError
from .kernels import FAMILIES, KernelSpec
from .kpls import fit_kpls, kpls_predict, load_model, save_model
from .selection import (
    FOLD_SCALING_MODES,
    SearchConfig,
    dump_report,
    r_squared,
    search_hyperparameters,
    search_report,
)
from .synthetic import KINDS, generate

log = logging.getLogger("kplsqsar")

PATH_FIELDS = ("calibration", "input", "output", "model", "report", "join", "sequences",
               "matrix", "molecules", "prediction_output")


@dataclass
class RunConfig:
    kernel: str = "gaussian"
    centering: bool = False
    scaling: str = "mad"
    fold_scaling: str = "strict"
    nu_min: int = 1
    nu_max: int = 20
    eta_init: float | None = None
    eta_min: float | None = None
    eta_max: float | None = None
    simplex_tolerance: float = 1e-3
    max_simplex_evals: int = 60
    nu: int | None = None
    eta: float | None = None
    calibration: str | None = None
    input: str | None = None
    output: str | None = None
    model: str | None = None
    report: str | None = None
    join: str | None = None
    sequences: str | None = None
    matrix: str | None = None
    molecules: str | None = None
    prediction_output: str | None = None
    descriptor_kind: str = "simil"
    properties: list | None = None
    max_bin: int = 5
    synthetic_kind: str = "nonlinear"
    samples: int = 90
    features: int = 50
    prediction_samples: int = 0
    noise: float = 0.05
    seed: int | None = None

    def validate(self, command):
        if self.kernel not in FAMILIES:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.scaling not in SCALING_MODES:
            raise ConfigError(f"unknown scaling mode {self.scaling!r}")
        if self.fold_scaling not in FOLD_SCALING_MODES:
            raise ConfigError(f"unknown fold scaling mode {self.fold_scaling!r}")
        paths = [Path(p).resolve() for p in (getattr(self, f) for f in PATH_FIELDS) if p]
        if len(set(paths)) != len(paths):
            raise ConfigError("input and output paths must all be distinct")
        if (self.seed is not None) != (command == "gen-synthetic"):
            raise ConfigError("--seed is required for gen-synthetic and only valid there")

    def search_config(self):
        bounds = None
        if self.eta_min is not None or self.eta_max is not None:
            if self.eta_min is None or self.eta_max is None:
                raise ConfigError("--eta-min and --eta-max must be given together")
            bounds = (self.eta_min, self.eta_max)
        return SearchConfig(self.nu_min, self.nu_max, self.eta_init, bounds,
                            self.simplex_tolerance, self.max_simplex_evals)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) in (None, []):
            raise ConfigError(f"--{name.replace('_', '-')} is required")


def _add_model_options(p):
    p.add_argument("--kernel", choices=FAMILIES)
    p.add_argument("--center", dest="centering", action="store_const", const=True,
                   help="center the kernel matrix and the response")
    p.add_argument("--scaling", choices=SCALING_MODES)


def build_parser():
    parser = _Parser(prog="kplsqsar", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file supplying any option; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("search", help="LOO hyperparameter search on a calibration set")
    p.add_argument("--calibration")
    p.add_argument("--output", help="CV report path")
    _add_model_options(p)
    p.add_argument("--fold-scaling", choices=FOLD_SCALING_MODES)
    p.add_argument("--nu-min", type=int)
    p.add_argument("--nu-max", type=int)
    p.add_argument("--eta-init", type=float)
    p.add_argument("--eta-min", type=float)
    p.add_argument("--eta-max", type=float)
    p.add_argument("--simplex-tolerance", type=float)
    p.add_argument("--max-simplex-evals", type=int)

    p = sub.add_parser("fit", help="fit and save a model")
    p.add_argument("--calibration")
    p.add_argument("--output", help="model path")
    p.add_argument("--report", help="take kernel, nu and eta from a search report")
    _add_model_options(p)
    p.add_argument("--nu", type=int)
    p.add_argument("--eta", type=float)

    p = sub.add_parser("predict", help="apply a saved model to new samples")
    p.add_argument("--model")
    p.add_argument("--input")
    p.add_argument("--output", help="prediction table path")
    p.add_argument("--report", help="also write the summary to this path")

    p = sub.add_parser("descriptors", help="compute SIMIL or RAD descriptor columns")
    p.add_argument("--kind", dest="descriptor_kind", choices=("simil", "rad"))
    p.add_argument("--sequences", help="id,sequence table (simil)")
    p.add_argument("--matrix", help="20x20 similarity matrix file (simil); default: class scores")
    p.add_argument("--molecules", help="molecule graph file (rad)")
    p.add_argument("--property", dest="properties", action="append", help="atomic property (rad)")
    p.add_argument("--max-bin", type=int)
    p.add_argument("--join", help="dataset to append the columns to, matched by sample id")
    p.add_argument("--output")

    p = sub.add_parser("gen-synthetic", help="write a seeded synthetic dataset")
    p.add_argument("--kind", dest="synthetic_kind", choices=KINDS)
    p.add_argument("--samples", type=int)
    p.add_argument("--features", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--output")
    p.add_argument("--prediction-samples", type=int)
    p.add_argument("--prediction-output")
    return parser


def resolve_config(args):
    """RunConfig from defaults, then the config file, then flags.

    Also returns the names set by the file or by flags.
    """
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    explicit = set()
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in doc.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
            explicit.add(key)
    for key, value in vars(args).items():
        if key in known and value is not None:
            setattr(cfg, key, value)
            explicit.add(key)
    return cfg, explicit


def cmd_search(cfg):
    _require(cfg, "calibration", "output")
    data = load_table(cfg.calibration, has_response=True)
    log.info("search: %d samples x %d features, %s kernel", data.n_samples, data.n_features, cfg.kernel)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EarlyStopWarning)
        result = search_hyperparameters(data, cfg.kernel, cfg.search_config(), cfg.centering,
                                        cfg.scaling, cfg.fold_scaling)
    Path(cfg.output).write_text(dump_report(search_report(result)), encoding="utf-8")
    eta = "-" if result.eta is None else repr(result.eta)
    print(f"best nu={result.nu} eta={eta} loo_r2={result.r2!r}")


def _read_report(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid report: {exc}") from exc
    if doc.get("format") != "kplsqsar-cv-report":
        raise DataError(f"{path}: not a search report")
    return doc


def cmd_fit(cfg, explicit):
    _require(cfg, "calibration", "output")
    if cfg.report:
        doc = _read_report(cfg.report)
        settings = doc["settings"]
        for key, value in (("kernel", doc["kernel"]), ("nu", doc["best"]["nu"]),
                           ("eta", doc["best"]["eta"]), ("centering", settings["centering"]),
                           ("scaling", settings["scaling"])):
            if key not in explicit:
                setattr(cfg, key, value)
    _require(cfg, "nu")
    spec = KernelSpec(cfg.kernel, cfg.eta)
    data = load_table(cfg.calibration, has_response=True)
    if cfg.nu > data.n_samples:
        raise ConfigError(f"nu={cfg.nu} exceeds the {data.n_samples} calibration samples")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EarlyStopWarning)
        model = fit_kpls(data, spec, cfg.nu, cfg.centering, cfg.scaling)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    save_model(model, cfg.output)
    print(f"fitted {cfg.kernel} model with {model.nu} components on {data.n_samples} samples")


def cmd_predict(cfg):
    _require(cfg, "model", "input", "output")
    model = load_model(cfg.model)
    data = load_table(cfg.input)
    z = kpls_predict(model, data.features)
    out = Dataset(z.reshape(-1, 1), data.response, data.sample_ids, ("prediction",))
    write_table(out, cfg.output)
    lines = [f"samples: {data.n_samples}"]
    if data.response is not None:
        lines.append(f"r2: {r_squared(data.response, z)!r}")
    text = "\n".join(lines) + "\n"
    if cfg.report:
        Path(cfg.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_descriptors(cfg):
    _require(cfg, "output")
    if cfg.descriptor_kind == "simil":
        _require(cfg, "sequences")
        matrix = desc.read_simil_matrix(cfg.matrix) if cfg.matrix else desc.class_score_matrix()
        table = desc.simil_table(desc.read_sequences(cfg.sequences), matrix)
    elif cfg.descriptor_kind == "rad":
        _require(cfg, "molecules", "properties")
        if cfg.max_bin < 0:
            raise ConfigError("--max-bin must be non-negative")
        table = desc.rad_table(desc.read_molgraphs(cfg.molecules), cfg.properties, cfg.max_bin)
    else:
        raise ConfigError(f"unknown descriptor kind {cfg.descriptor_kind!r}")
    if cfg.join:
        table = join_features(load_table(cfg.join), table)
    write_table(table, cfg.output)
    print(f"wrote {table.n_samples} samples x {table.n_features} columns")


def cmd_gen_synthetic(cfg):
    _require(cfg, "output")
    if cfg.prediction_samples and not cfg.prediction_output:
        raise ConfigError("--prediction-samples needs --prediction-output")
    try:
        out = generate(cfg.synthetic_kind, cfg.samples, cfg.features, cfg.seed,
                       noise=cfg.noise, n_extra=cfg.prediction_samples)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cal, pred = out if cfg.prediction_samples else (out, None)
    write_table(cal, cfg.output)
    if pred is not None:
        write_table(pred, cfg.prediction_output)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg, explicit = resolve_config(args)
        cfg.validate(args.command)
        if args.command == "search":
            cmd_search(cfg)
        elif args.command == "fit":
            cmd_fit(cfg, explicit)
        elif args.command == "predict":
            cmd_predict(cfg)
        elif args.command == "descriptors":
            cmd_descriptors(cfg)
        else:
            cmd_gen_synthetic(cfg)
    except KplsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
