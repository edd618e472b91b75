"""Command-line front end.

    eqvqc run CONFIG            train an experiment, write loss.csv / params.csv / summary.json
    eqvqc check EXP PARAMS      invariance report for parameters from params.csv or summary.json
    eqvqc twirl GROUP PAULI     twirl a Pauli string over one of the experiment groups
    eqvqc list                  list the built-in experiments

Config files are INI-style with sections ``[run]``, ``[train]``, ``[emit]`` and
``[experiment]``; unknown sections or keys are errors. Exit codes: 0 ok,
2 configuration or input error, 3 non-finite loss.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from eqvqc.experiments import EXPERIMENTS, GraphData, invariance_report, make_experiment
from eqvqc.groups import enumerate_group, generator_commutator_norms, twirl
from eqvqc.learner import NonFiniteLossError, TrainConfig, train
from eqvqc.simulator import pauli_decompose, pauli_matrix

log = logging.getLogger("eqvqc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
OUTPUT_ENV = "EQVQC_OUTPUT_DIR"
FLOAT_FMT = ".17g"

TWIRL_GROUPS = ("c2", "c2c2", "d4", "s6")
EMIT_KEYS = ("loss_csv", "params_csv", "summary_json")
RUN_KEYS = ("experiment", "output_dir")
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig) if f.name != "experiment")


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _graph_file(path: str) -> GraphData:
    return GraphData.parse(Path(path).read_text())


# per-experiment options accepted in [experiment] and by `check --option`
EXPERIMENT_OPTIONS = {
    "line2x2": {"shared": _parse_bool, "readout_prep": _parse_bool},
    "c2": {},
    "c2c2": {},
    "d4": {},
    "s6": {"edge_probability": float, "fixed_graph": _graph_file},
    "intertwiner": {"group": str, "layers": int},
}


def build_experiment(name: str, options: dict[str, str]):
    if name not in EXPERIMENT_OPTIONS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    allowed = EXPERIMENT_OPTIONS[name]
    unknown = set(options) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown option(s) for {name}: {', '.join(sorted(unknown))}")
    try:
        parsed = {k: allowed[k](v) for k, v in options.items()}
        return make_experiment(name, **parsed)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None


# -- run ---------------------------------------------------------------------------------


def load_run_config(path: str | os.PathLike) -> dict:
    """Parse and validate a run config; returns the pieces ``cmd_run`` needs."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str  # keep keys case-sensitive so typos are caught
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    sections = {"run": RUN_KEYS, "train": TRAIN_KEYS, "emit": EMIT_KEYS, "experiment": None}
    for section in parser.sections():
        if section not in sections:
            raise ConfigError(f"unknown section [{section}]")
        allowed = sections[section]
        if allowed is not None:
            bad = set(parser[section]) - set(allowed)
            if bad:
                raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(bad))}")
    run = dict(parser["run"]) if parser.has_section("run") else {}
    if "experiment" not in run:
        raise ConfigError("[run] experiment is required")
    options = dict(parser["experiment"]) if parser.has_section("experiment") else {}
    experiment = build_experiment(run["experiment"], options)
    train_values = {**experiment.defaults, **(dict(parser["train"]) if parser.has_section("train") else {})}
    train_values["experiment"] = run["experiment"]
    try:
        config = TrainConfig.from_mapping(train_values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[train]: {exc}") from None
    emit = {k: True for k in EMIT_KEYS}
    if parser.has_section("emit"):
        emit.update({k: _parse_bool(v) for k, v in parser["emit"].items()})
    default_root = Path(os.environ.get(OUTPUT_ENV, "runs"))
    output_dir = Path(run["output_dir"]) if "output_dir" in run else default_root / run["experiment"]
    return {"config": config, "experiment": experiment, "options": options, "emit": emit, "output_dir": output_dir}


def _fmt(x: float) -> str:
    return format(float(x), FLOAT_FMT)


def write_loss_csv(path: Path, record) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, (tr, va) in enumerate(zip(record.train_loss, record.val_loss), 1):
            w.writerow([epoch, _fmt(tr), _fmt(va)])


def write_params_csv(path: Path, record) -> None:
    """Row 0 holds the initial parameters, row ``e`` the parameters after epoch ``e``."""
    p = len(record.initial_params)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch"] + [f"theta_{i}" for i in range(p)])
        for epoch, theta in enumerate([record.initial_params] + record.params):
            w.writerow([epoch] + [_fmt(t) for t in theta])


def read_params(path: str | os.PathLike) -> tuple[np.ndarray, dict]:
    """Final parameters from ``params.csv`` (last row) or ``summary.json``.

    Also returns the experiment options recorded in a summary (empty for CSV).
    """
    path = Path(path)
    try:
        if path.suffix == ".json":
            summary = json.loads(path.read_text())
            return np.array(summary["final_params"], dtype=float), summary.get("experiment_options", {})
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read parameters from {path}: {exc}") from None
    if len(rows) < 2 or not rows[0] or rows[0][0] != "epoch":
        raise ConfigError(f"{path} is not a params.csv file")
    try:
        return np.array([float(v) for v in rows[-1][1:]]), {}
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def cmd_run(config_path: str) -> int:
    try:
        run = load_run_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config, experiment, out = run["config"], run["experiment"], run["output_dir"]
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"config error: output directory {out} is not writable: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        record = train(config, experiment)
    except NonFiniteLossError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    elapsed = time.perf_counter() - start
    report = invariance_report(experiment, record.final_params)
    emit = run["emit"]
    if emit["loss_csv"]:
        write_loss_csv(out / "loss.csv", record)
    if emit["params_csv"]:
        write_params_csv(out / "params.csv", record)
    if emit["summary_json"]:
        summary = record.summary()
        summary.update(
            experiment=experiment.name,
            experiment_options=run["options"],
            epoch_seconds=record.epoch_seconds,
            total_seconds=elapsed,
            invariance=report,
        )
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(
        f"{experiment.name}: val loss {record.initial_val_loss:.3e} -> {record.val_loss[-1]:.3e}, "
        f"max invariance gap {report['max_deviation']:.3e} ({elapsed:.1f} s) -> {out}"
    )
    return EXIT_OK


# -- check / twirl / list ------------------------------------------------------------------


def _parse_options(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"option {pair!r} is not key=value")
        out[key.strip()] = value.strip()
    return out


def cmd_check(name: str, params_path: str, options: list[str] = (), json_out: str | None = None) -> int:
    try:
        theta, recorded = read_params(params_path)
        experiment = build_experiment(name, {**recorded, **_parse_options(list(options))})
        report = invariance_report(experiment, theta)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"experiment      {name} ({report['samples']} points, seed {report['sample_seed']})")
    for g, dev in report["generator_deviation"].items():
        print(f"  generator {g:<6} max |h(V(g)x) - h(x)| = {dev:.6e}")
    print(f"max deviation   {report['max_deviation']:.6e}")
    if "max_deviation_all_elements" in report:
        print(f"all {report['group_order']} elements  {report['max_deviation_all_elements']:.6e}")
    for what, norms in report["commutant_norms"].items():
        print(f"[W(g), {what}]  " + ", ".join(f"{g}: {v:.3e}" for g, v in norms.items()))
    text = json.dumps(report, indent=2)
    if json_out:
        Path(json_out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def format_matrix(m: np.ndarray) -> str:
    def entry(z):
        if abs(z.imag) < 1e-15:
            return f"{z.real:.6g}"
        return f"{z.real:.6g}{z.imag:+.6g}j"

    if m.shape[0] <= 16:
        cells = [[entry(z) for z in row] for row in m]
        width = max(len(c) for row in cells for c in row)
        return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells)
    rows, cols = np.nonzero(np.abs(m) > 1e-15)
    lines = [f"{m.shape[0]}x{m.shape[1]} matrix, {len(rows)} nonzero entries (row, col): value"]
    lines += [f"({r}, {c}): {entry(m[r, c])}" for r, c in zip(rows, cols)]
    return "\n".join(lines)


def cmd_twirl(group: str, word: str) -> int:
    if group not in TWIRL_GROUPS:
        print(f"error: group must be one of {', '.join(TWIRL_GROUPS)}", file=sys.stderr)
        return EXIT_CONFIG
    rep = make_experiment(group).w_rep
    word = word.strip()
    if len(word) != rep.num_qubits:
        print(f"error: {group} acts on {rep.num_qubits} qubits, got a word of length {len(word)}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        x = pauli_matrix(word)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    elements = enumerate_group(rep)
    t = twirl(rep, x, elements)
    worst = max(generator_commutator_norms(rep, t).values())
    print(f"twirl of {word} over {rep.group.name} ({len(elements)} elements):")
    print(format_matrix(t))
    print(f"Pauli form: {pauli_decompose(t)}")
    print(f"max generator commutator norm: {worst:.3e}")
    return EXIT_OK


def cmd_list() -> int:
    for name in EXPERIMENTS:
        spec = make_experiment(name)
        print(f"{name:<12} {spec.num_params:>2} params  {spec.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqvqc", description="Equivariant variational quantum circuits.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch losses")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="train an experiment from a config file")
    p.add_argument("config")
    p = sub.add_parser("check", help="numerical invariance report for trained parameters")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("params", help="params.csv (last row is used) or summary.json")
    p.add_argument("--option", action="append", default=[], metavar="KEY=VALUE", help="experiment option")
    p.add_argument("--json", dest="json_out", metavar="PATH", help="write the JSON report here instead of stdout")
    p = sub.add_parser("twirl", help="twirl a Pauli string over an experiment group")
    p.add_argument("group", choices=TWIRL_GROUPS)
    p.add_argument("pauli")
    sub.add_parser("list", help="list the built-in experiments")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "check":
        return cmd_check(args.experiment, args.params, args.option, args.json_out)
    if args.command == "twirl":
        return cmd_twirl(args.group, args.pauli)
    return cmd_list()


if __name__ == "__main__":
    sys.exit(main())
