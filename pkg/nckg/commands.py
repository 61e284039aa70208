# -*- coding: utf-8 -*-
#
# Copyright (C) 2026 nckg-review contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional, Type, Union

from nckg import cli, utils
from nckg.client import Gateway
from nckg.config import AppConfig
from nckg.construct import (
    Clause,
    commit,
    extract_clause,
    ingest_corpus,
    read_staging,
    staging_filename,
    write_staging,
)
from nckg.evaluation import (
    evaluate_run,
    load_gold,
    load_rs_scores,
    load_verdicts,
    write_report,
)
from nckg.lexical import build_clause_index, build_index, DocKind
from nckg.ontology import load_default_ontology, OntologyModel, validate
from nckg.query import evaluate, parse_query
from nckg.review import ReviewContext, ReviewMode, review_corpus
from nckg.store import GraphStore
from nckg.turtle import format_term, load_store, save_store

Row = Dict[str, Any]


class NckgCLI(object):
    def __init__(self, config: AppConfig, command: str, args: Dict[str, Any]) -> None:
        self.config = config
        self.command = command.replace("-", "_")
        self.args = args
        self._onto: Optional[OntologyModel] = None

    def __call__(self) -> Any:
        return getattr(self, "do_%s" % self.command)()

    @property
    def onto(self) -> OntologyModel:
        if self._onto is None:
            self._onto = load_default_ontology(self.config.ontology_path)
        return self._onto

    def _store_path(self) -> str:
        if not self.config.store_path:
            cli.die("No store configured: use --store or 'store_path' in the config")
        return self.config.store_path  # type: ignore

    def _load_store(self, must_exist: bool = True) -> GraphStore:
        path = self._store_path()
        store = GraphStore(max_depth=self.config.max_depth)
        if os.path.exists(path):
            load_store([path], store=store)
        elif must_exist:
            cli.die("Store file not found: %s" % path)
        return store

    def _clauses(self, path: str) -> List[Clause]:
        clauses = []
        try:
            for record in utils.read_jsonl(path):
                clauses.append(Clause.from_dict(record))
        except (OSError, ValueError) as e:
            cli.die("Impossible to read clauses", e)
        return clauses

    def _gateway(self) -> Gateway:
        self.config.require_api_key()
        return Gateway.from_config(self.config.gateway)

    def do_import(self) -> Row:
        store = self._load_store(must_exist=False)
        for path in self.args["files"]:
            try:
                load_store(
                    [path],
                    normalize_risk_label=self.args.get("normalize_risk_label", False),
                    store=store,
                )
            except Exception as e:
                cli.die("Impossible to import %s" % path, e)
        save_store(store, self._store_path())
        return store.stats().to_dict()

    def do_stats(self) -> Row:
        store = self._load_store()
        if self.args.get("validate"):
            for diagnostic in validate(store, self.onto):
                sys.stderr.write("%s\n" % diagnostic)
        return store.stats().to_dict()

    def do_query(self) -> Any:
        text = self.args.get("query")
        if self.args.get("file"):
            with open(self.args["file"], encoding="utf-8") as f:
                text = f.read()
        if not text:
            cli.die("Give a query inline or with --file")
        store = self._load_store()
        query = parse_query(text, source=self.args.get("file"))
        table = evaluate(store, query)
        prefixes = dict(store.prefixes)
        prefixes.update(query.prefixes)
        return QueryResult(table.header, table.to_dicts(prefixes))

    def do_map(self) -> Any:
        store = self._load_store()
        index = build_index(store, self.onto)
        kind = {"entity": DocKind.ENTITY, "event": DocKind.EVENT}.get(
            self.args.get("kind") or ""
        )
        rows = [
            {
                "id": format_term(m.source, store.prefixes),  # type: ignore
                "kind": m.kind.value,
                "score": "%.6f" % m.score,
            }
            for m in index.top_k(self.args["term"], self.config.top_k, kind)
        ]
        return QueryResult(["id", "kind", "score"], rows)

    def do_extract(self) -> str:
        clauses = self._clauses(self.args["clauses"])
        if self.args.get("id"):
            clauses = [c for c in clauses if c.id == self.args["id"]]
        if len(clauses) != 1:
            cli.die("Select exactly one clause with --id (found %d)" % len(clauses))
        gateway = self._gateway()
        staged = extract_clause(
            clauses[0], self.onto, gateway, self.config.load_aliases()
        )
        path = os.path.join(self.config.output_dir, staging_filename(clauses[0].id))
        write_staging(staged, path)
        return path

    def do_commit(self) -> Row:
        store = self._load_store(must_exist=False)
        staged = [read_staging(path) for path in self.args["files"]]
        triples = nested = 0
        for item in staged:
            delta = commit(item, store, self.onto)
            triples += delta.triples_added
            nested += delta.nested_added
        save_store(store, self._store_path())
        return {"clauses": len(staged), "triples_added": triples, "nested_added": nested}

    def do_ingest(self) -> str:
        gateway = self._gateway()
        staging_dir = os.path.join(self.config.output_dir, "staging")
        summary = ingest_corpus(
            self.args["corpus"],
            self.onto,
            gateway,
            staging_dir,
            self.config.load_aliases(),
        )
        utils.write_json(
            os.path.join(self.config.output_dir, "ingest.json"), summary.to_dict()
        )
        for clause_id, message in summary.failures:
            sys.stderr.write("%s: %s\n" % (clause_id, message))
        if not summary.staged and summary.failures:
            cli.die("No clause could be extracted")
        return summary.to_markdown()

    def do_review(self) -> str:
        mode = ReviewMode(self.args["mode"])
        clauses = self._clauses(self.args["clauses"])
        ctx = ReviewContext(
            gateway=self._gateway(),
            onto=self.onto,
            top_k=self.config.top_k,
            include_ontology_risks=self.args.get("ontology_risks", False),
        )
        if mode is ReviewMode.NCKG:
            ctx.store = self._load_store()
            ctx.index = build_index(ctx.store, ctx.onto)
        elif mode is ReviewMode.VECTOR:
            if not self.args.get("catalog"):
                cli.die("vector mode needs --catalog <standard provisions.jsonl>")
            catalog = self._clauses(self.args["catalog"])
            ctx.catalog = {c.id: c.text for c in catalog}
            ctx.catalog_index = build_clause_index((c.id, c.text) for c in catalog)
        summary = review_corpus(clauses, mode, ctx, self.config.output_dir)
        for failure in summary.failures:
            sys.stderr.write("%s: %s\n" % (failure.clause_id, failure.message))
        if summary.total_failure:
            cli.die("Every clause failed to review")
        return "reviewed %d of %d clauses: %s" % (
            len(summary.verdicts),
            len(clauses),
            os.path.join(self.config.output_dir, "verdicts.jsonl"),
        )

    def do_eval(self) -> str:
        try:
            dataset = load_gold(self.args["gold"])
            verdicts = load_verdicts(self.args["verdicts"])
            rs_scores = load_rs_scores(self.args["rs"]) if self.args.get("rs") else None
        except (OSError, ValueError) as e:
            cli.die("Impossible to read evaluation input", e)
        report = evaluate_run(dataset, verdicts, rs_scores)
        write_report(report, self.config.output_dir)
        out = "macro_f1: %.4f" % report.macro_f1
        if report.rs_mean is not None:
            out += "\nrs_mean: %.2f" % report.rs_mean
        return out


class QueryResult(object):
    """Rows with a fixed column order, as printers display them."""

    def __init__(self, header: List[str], rows: List[Row]) -> None:
        self.header = header
        self.rows = rows


def extend_parser(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    subparsers = parser.add_subparsers(
        title="command", dest="command", help="Command to run."
    )
    subparsers.required = True

    sub = subparsers.add_parser("import", help="Parse .ttls files into the store")
    sub.add_argument("files", nargs="+", help="Turtle-star files")
    sub.add_argument(
        "--normalize-risk-label",
        action="store_true",
        help="Rewrite ckg:hasRiskLabel as ckg:hasRiskCategory",
    )

    sub = subparsers.add_parser("stats", help="Count triples, nested triples, entities, events")
    sub.add_argument(
        "--validate", action="store_true", help="Print ontology diagnostics to stderr"
    )

    sub = subparsers.add_parser("query", help="Run a SELECT query against the store")
    sub.add_argument("query", nargs="?", help="Inline query text")
    sub.add_argument("--file", help="Read the query from a file")

    sub = subparsers.add_parser("map", help="Top-k entities and events for a term")
    sub.add_argument("term")
    sub.add_argument("--kind", choices=["entity", "event"])

    sub = subparsers.add_parser("extract", help="Extract one clause to a staging file")
    sub.add_argument("clauses", help="Clause JSONL")
    sub.add_argument("--id", help="Clause id to extract")

    sub = subparsers.add_parser("commit", help="Merge approved staging files into the store")
    sub.add_argument("files", nargs="+", help="Staging files (.stage.ttls)")

    sub = subparsers.add_parser("ingest", help="Extract every clause of a corpus")
    sub.add_argument("corpus", help="Clause JSONL")

    sub = subparsers.add_parser("review", help="Review clauses for risk")
    sub.add_argument("clauses", help="Clause JSONL")
    sub.add_argument(
        "--mode", choices=[m.value for m in ReviewMode], default=ReviewMode.NCKG.value
    )
    sub.add_argument("--catalog", help="Standard provisions JSONL (vector mode)")
    sub.add_argument(
        "--ontology-risks",
        action="store_true",
        help="Add risk categories implied by the ontology classes of retrieved events",
    )

    sub = subparsers.add_parser("eval", help="Score verdicts against gold annotations")
    sub.add_argument("gold", help="Gold JSONL")
    sub.add_argument("verdicts", help="Verdict JSONL")
    sub.add_argument("rs", nargs="?", help="Human summary scores JSONL")

    return parser


class TSVPrinter(object):
    def display(self, d: Dict[str, Any], **kwargs: Any) -> None:
        for k, v in d.items():
            print("%s\t%s" % (k, v))

    def display_list(self, data: QueryResult, **kwargs: Any) -> None:
        print("\t".join(data.header))
        for row in data.rows:
            print("\t".join(str(row[name]) for name in data.header))


class QueryTSVPrinter(TSVPrinter):
    """Variable columns carry a ``?`` prefix."""

    def display_list(self, data: QueryResult, **kwargs: Any) -> None:
        print("\t".join("?" + name for name in data.header))
        for row in data.rows:
            print("\t".join(row[name] for name in data.header))


class JSONPrinter(object):
    def display(self, d: Dict[str, Any], **kwargs: Any) -> None:
        print(json.dumps(d, ensure_ascii=False))

    def display_list(self, data: QueryResult, **kwargs: Any) -> None:
        for row in data.rows:
            print(json.dumps(row, ensure_ascii=False))


class YAMLPrinter(object):
    def display(self, d: Dict[str, Any], **kwargs: Any) -> None:
        try:
            import yaml  # noqa

            print(yaml.safe_dump(d, default_flow_style=False, sort_keys=False))
        except ImportError:
            exit(
                "PyYaml is not installed.\n"
                "Install it with `pip install PyYaml` "
                "to use the yaml output feature"
            )

    def display_list(self, data: QueryResult, **kwargs: Any) -> None:
        try:
            import yaml  # noqa

            print(
                yaml.safe_dump(data.rows, default_flow_style=False, sort_keys=False),
                end="",
            )
        except ImportError:
            exit(
                "PyYaml is not installed.\n"
                "Install it with `pip install PyYaml` "
                "to use the yaml output feature"
            )


PRINTERS: Dict[
    str, Union[Type[TSVPrinter], Type[JSONPrinter], Type[YAMLPrinter]]
] = {
    "tsv": TSVPrinter,
    "json": JSONPrinter,
    "yaml": YAMLPrinter,
}


def run(config: AppConfig, command: str, args: Dict[str, Any], output: str) -> None:
    n_cli = NckgCLI(config=config, command=command, args=args)
    data = n_cli()

    printer: Union[TSVPrinter, JSONPrinter, YAMLPrinter] = PRINTERS[output]()
    if output == "tsv" and command == "query":
        printer = QueryTSVPrinter()

    if isinstance(data, dict):
        printer.display(data)
    elif isinstance(data, QueryResult):
        printer.display_list(data)
    elif isinstance(data, str):
        print(data)


__all__ = ["NckgCLI", "extend_parser", "run", "PRINTERS"]
