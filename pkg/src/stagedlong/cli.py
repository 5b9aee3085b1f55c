"""Command-line front end.

Subcommands ``fit``, ``markov``, ``marginal`` and ``oracle`` read a CSV and
write a CEG (DOT), a JSON dump, a per-stage probability table and,
optionally, the AHC trace. ``export`` re-renders a JSON dump and ``diff``
compares the stagings of two dumps.

Settings may also come from an INI file (``--config``) with a ``[run]``
section whose keys mirror the long flags (``alpha_bar = 2``,
``margins = A,B,C; A,B,D``). Flags given on the command line win.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

from . import ceg as ceg_io
from .data import Dataset, load_dataset, load_example, load_schema
from .errors import ArgumentError, ParseError, StagedTreeError
from .longitudinal import (
    TEMPLATES,
    FitResult,
    compare_stagings,
    dag_template,
    fit_full,
    fit_marginal_sequence,
    fit_with_markov_assumptions,
    parse_edge_list,
)
from .scoring import ESTIMATORS, assign_mass_conserving_prior
from .selection import POLICIES, ahc_select, default_hyperstage, exhaustive_select, initial_zero_sample_staging
from .tree import build_event_tree

WORKFLOWS = ("full", "markov", "marginal", "oracle")


@dataclass
class RunConfig:
    workflow: str = "full"
    input: Optional[str] = None
    example: Optional[str] = None
    schema: Optional[str] = None
    order: Optional[list] = None
    alpha_bar: Optional[str] = None
    estimator: str = "mean"
    policy: str = "same-labels"
    missing: str = "prefix"
    out: str = "."
    prefix: str = "model"
    trace: bool = False
    template: Optional[str] = None
    T: Optional[int] = None
    dag: Optional[str] = None
    outcomes: Optional[list] = None
    covariates: Optional[list] = None
    invariant: Optional[list] = None
    invariant_links: str = "all"
    margins: list = field(default_factory=list)
    max_class: int = 8
    seed: Optional[int] = None  # reserved; the core is deterministic

    def validate(self) -> None:
        if self.workflow not in WORKFLOWS:
            raise ArgumentError(f"unknown workflow {self.workflow!r}")
        if (self.input is None) == (self.example is None):
            raise ArgumentError("give exactly one of an input CSV or --example")
        if self.estimator not in ESTIMATORS:
            raise ArgumentError(f"--estimator must be one of {ESTIMATORS}")
        if self.policy not in POLICIES:
            raise ArgumentError(f"--policy must be one of {POLICIES}")
        if self.missing not in ("prefix", "complete"):
            raise ArgumentError("--missing must be 'prefix' or 'complete'")
        if self.workflow == "markov" and (self.template is None) == (self.dag is None):
            raise ArgumentError("markov needs exactly one of --template or --dag")
        if self.workflow != "markov" and (self.template or self.dag):
            raise ArgumentError("--template/--dag only apply to the markov workflow")
        if self.workflow == "marginal" and not self.margins:
            raise ArgumentError("marginal needs at least one --margin")
        if self.workflow != "marginal" and self.margins:
            raise ArgumentError("--margin only applies to the marginal workflow")


def _split(text: Optional[str]) -> Optional[list]:
    if text is None:
        return None
    return [x.strip() for x in text.split(",") if x.strip()]


def _load_data(cfg: RunConfig) -> Dataset:
    schema = load_schema(cfg.schema) if cfg.schema else None
    if cfg.example:
        data = load_example(cfg.example)
        if schema:
            raise ArgumentError("--schema cannot be combined with --example")
        return data
    if not os.path.exists(cfg.input):
        raise ArgumentError(f"input file {cfg.input!r} does not exist")
    with open(cfg.input, "rb") as fh:
        return load_dataset(fh, schema)


def _roles(data: Dataset, role: str) -> list:
    found = [v for v in data.schema if v.role == role]
    return [v.name for v in sorted(found, key=lambda v: v.time or 0)]


def _markov_dag(cfg: RunConfig, data: Dataset, order: list):
    if cfg.dag:
        with open(cfg.dag, encoding="utf-8") as fh:
            return parse_edge_list(fh.read(), vertices=order)
    outcomes = cfg.outcomes or _roles(data, "timed-outcome")
    covariates = cfg.covariates if cfg.covariates is not None else _roles(data, "timed-covariate")
    invariant = cfg.invariant if cfg.invariant is not None else _roles(data, "time-invariant-covariate")
    if not outcomes:
        raise ArgumentError("template needs --outcomes (or timed-outcome roles in the schema)")
    T = cfg.T if cfg.T is not None else len(outcomes)
    return dag_template(cfg.template, T, covariates, outcomes, invariant, cfg.invariant_links)


def probability_table(result_st) -> str:
    """One row per stage: id, members, labels, posterior vector, sample size,
    prior-only flag (tab separated)."""
    tree, staging = result_st.tree, result_st.staging
    probs = result_st.require_probabilities()
    rows = ["stage\tmembers\tlabels\tprobabilities\tsample_size\tprior_only"]
    for i, stage in enumerate(staging.stages):
        n = sum(tree.sample_size(s) for s in stage)
        vec = ",".join(f"{p:.6f}" for p in probs.probs[stage[0]])
        members = ",".join(f"s{s}" for s in stage)
        rows.append(
            f"{i}\t{members}\t{','.join(tree.labels(stage[0]))}\t{vec}\t{n}\t{str(n == 0).lower()}"
        )
    return "\n".join(rows) + "\n"


def _write(path: str, text: str, written: list) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    written.append(path)


def _write_result(result: FitResult, base: str, trace: bool, written: list) -> None:
    st = result.staged_tree
    _write(base + ".dot", ceg_io.export_graph(result.ceg), written)
    _write(base + ".json", ceg_io.dumps(st), written)
    _write(base + ".stages.tsv", probability_table(st), written)
    if trace:
        _write(base + ".trace.txt", "\n".join(result.trace.lines()) + "\n", written)


def run(cfg: RunConfig) -> list:
    """Execute a workflow and return the paths written."""
    cfg.validate()
    data = _load_data(cfg)
    order = cfg.order or list(data.names)
    complete = cfg.missing == "complete"
    os.makedirs(cfg.out, exist_ok=True)
    base = os.path.join(cfg.out, cfg.prefix)
    written: list = []
    if cfg.workflow == "full":
        result = fit_full(data, order, cfg.alpha_bar, cfg.estimator, cfg.policy, complete)
        _write_result(result, base, cfg.trace, written)
    elif cfg.workflow == "markov":
        dag = _markov_dag(cfg, data, order)
        result = fit_with_markov_assumptions(
            data, order, dag, cfg.alpha_bar, cfg.estimator, cfg.policy, complete
        )
        _write_result(result, base, cfg.trace, written)
        _write(base + ".dag.txt", dag.to_text(), written)
    elif cfg.workflow == "marginal":
        results = fit_marginal_sequence(
            data, cfg.margins, cfg.alpha_bar, cfg.estimator, cfg.policy, complete
        )
        for i, result in enumerate(results, start=1):
            _write_result(result, f"{base}.m{i}", cfg.trace, written)
    elif cfg.workflow == "oracle":
        tree = build_event_tree(data, order, complete)
        prior = assign_mass_conserving_prior(tree, cfg.alpha_bar)
        hyper = default_hyperstage(tree, cfg.policy)
        initial = initial_zero_sample_staging(tree, hyper)
        best = exhaustive_select(tree, prior, hyper, cfg.max_class, initial, cfg.estimator)
        greedy, _ = ahc_select(tree, prior, initial, hyper, cfg.estimator)
        _write(base + ".dot", ceg_io.export_graph(ceg_io.build_ceg(best)), written)
        _write(base + ".json", ceg_io.dumps(best), written)
        _write(base + ".stages.tsv", probability_table(best), written)
        summary = {
            "exhaustive_log_score": best.log_score(),
            "ahc_log_score": greedy.log_score(),
            "same_staging": best.staging == greedy.staging,
        }
        _write(base + ".oracle.json", json.dumps(summary, indent=2, sort_keys=True) + "\n", written)
    return written


def _read_model(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return ceg_io.loads(fh.read())
    except FileNotFoundError:
        raise ArgumentError(f"model file {path!r} does not exist") from None


def _export(args) -> None:
    st = _read_model(args.model)
    if args.format == "json":
        text = ceg_io.dumps(st)
    elif args.what == "tree":
        text = ceg_io.export_graph(st)
    else:
        text = ceg_io.export_graph(ceg_io.build_ceg(st.estimated(st.probabilities.estimator if st.probabilities else "mean")))
    _emit(text, args.output)


def _diff(args) -> None:
    a, b = _read_model(args.first), _read_model(args.second)
    text = json.dumps(compare_stagings(a, b).to_dict(), indent=2, sort_keys=True) + "\n"
    _emit(text, args.output)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(output)
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="CSV file (header row, empty cell = missing)")
    p.add_argument("--example", help="use a bundled dataset instead of a CSV (e.g. depression)")
    p.add_argument("--schema", help="INI schema override (categories, roles, time indices)")
    p.add_argument("--config", help="INI run configuration with a [run] section")
    p.add_argument("--order", help="comma-separated variable order (default: CSV column order)")
    p.add_argument("--alpha-bar", dest="alpha_bar", help="equivalent sample size (default: max out-degree)")
    p.add_argument("--estimator", choices=ESTIMATORS)
    p.add_argument("--policy", choices=POLICIES, help="hyperstage policy")
    p.add_argument("--missing", choices=("prefix", "complete"), help="missing-data handling")
    p.add_argument("--out", help="output directory")
    p.add_argument("--prefix", help="artifact file name prefix")
    p.add_argument("--trace", action="store_true", default=None, help="write the AHC merge trace")
    p.add_argument("--seed", type=int, help="reserved; results are deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stagedlong", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="full staged tree selected by AHC")
    _add_common(p)

    p = sub.add_parser("markov", help="staged tree under DAG Markov assumptions")
    _add_common(p)
    p.add_argument("--template", choices=TEMPLATES)
    p.add_argument("-T", dest="T", type=int, help="number of time points")
    p.add_argument("--dag", help="edge list file, one 'parent -> child' per line")
    p.add_argument("--outcomes", help="comma-separated timed outcomes Y1..YT")
    p.add_argument("--covariates", help="comma-separated timed covariates X1..XT ('' for none)")
    p.add_argument("--invariant", help="comma-separated time-invariant covariates")
    p.add_argument("--invariant-links", dest="invariant_links", choices=("all", "first"))

    p = sub.add_parser("marginal", help="one staged tree per margin")
    _add_common(p)
    p.add_argument("--margin", action="append", dest="margin", help="comma-separated margin; repeatable")

    p = sub.add_parser("oracle", help="exhaustive selection on small trees")
    _add_common(p)
    p.add_argument("--max-class", dest="max_class", type=int, help="largest hyperstage class allowed")

    p = sub.add_parser("export", help="render a JSON model dump")
    p.add_argument("model")
    p.add_argument("--format", choices=("graph", "json"), default="graph")
    p.add_argument("--what", choices=("ceg", "tree"), default="ceg")
    p.add_argument("-o", "--output")

    p = sub.add_parser("diff", help="compare the stagings of two JSON model dumps")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("-o", "--output")
    return parser


_LIST_KEYS = ("order", "outcomes", "covariates", "invariant")


def _config_from_file(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ArgumentError(f"config file {path!r} does not exist") from None
    except configparser.Error as exc:
        raise ParseError(f"config file: {exc}") from None
    if not parser.has_section("run"):
        raise ParseError("config file lacks a [run] section")
    known = {f.name for f in fields(RunConfig)} - {"workflow"}
    out = {}
    for key, value in parser["run"].items():
        key = key.replace("-", "_")
        if key == "t":
            key = "T"
        if key not in known:
            raise ArgumentError(f"config file: unknown key {key!r}")
        if key in _LIST_KEYS:
            out[key] = _split(value)
        elif key == "margins":
            out[key] = [_split(m) for m in value.split(";") if m.strip()]
        elif key in ("T", "max_class", "seed"):
            out[key] = int(value)
        elif key == "trace":
            out[key] = parser["run"].getboolean(key)
        else:
            out[key] = value
    return out


def config_from_args(args) -> RunConfig:
    workflow = {"fit": "full"}.get(args.command, args.command)
    values = _config_from_file(args.config) if args.config else {}
    cli = {
        "input": args.input,
        "example": args.example,
        "schema": args.schema,
        "order": _split(args.order),
        "alpha_bar": args.alpha_bar,
        "estimator": args.estimator,
        "policy": args.policy,
        "missing": args.missing,
        "out": args.out,
        "prefix": args.prefix,
        "trace": args.trace,
        "seed": args.seed,
    }
    if workflow == "markov":
        cli.update(
            template=args.template,
            T=args.T,
            dag=args.dag,
            outcomes=_split(args.outcomes),
            covariates=_split(args.covariates),
            invariant=_split(args.invariant),
            invariant_links=args.invariant_links,
        )
    if workflow == "marginal" and args.margin:
        cli["margins"] = [_split(m) for m in args.margin]
    if workflow == "oracle":
        cli["max_class"] = args.max_class
    values.update({k: v for k, v in cli.items() if v is not None})
    return RunConfig(workflow=workflow, **values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            _export(args)
        elif args.command == "diff":
            _diff(args)
        else:
            for path in run(config_from_args(args)):
                print(path)
    except StagedTreeError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: argument: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
