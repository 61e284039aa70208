#!/usr/bin/env python
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
import logging
import sys
from typing import List, NoReturn, Optional

import nckg
import nckg.config
from nckg.exceptions import NckgError

# Commands that talk to the chat backend
GATEWAY_COMMANDS = ("extract", "ingest", "review")


def die(msg: str, e: Optional[Exception] = None) -> NoReturn:
    if e:
        msg = "%s (%s)" % (msg, e)
    sys.stderr.write(msg + "\n")
    sys.exit(1)


def enable_debug() -> None:
    from http.client import HTTPConnection  # noqa

    HTTPConnection.debuglevel = 1  # type: ignore
    logging.basicConfig()
    logging.getLogger().setLevel(logging.DEBUG)
    requests_log = logging.getLogger("requests.packages.urllib3")
    requests_log.setLevel(logging.DEBUG)
    requests_log.propagate = True


def _get_base_parser(add_help: bool = True) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        add_help=add_help,
        description="Contract knowledge graph construction and clause risk review",
    )
    parser.add_argument("--version", help="Display the version.", action="store_true")
    parser.add_argument(
        "-d", "--debug", help="Debug mode (display HTTP requests)", action="store_true"
    )
    parser.add_argument(
        "-c",
        "--config",
        action="append",
        help="Configuration file to use. Can be used multiple times.",
    )
    parser.add_argument("--store", help="Store file (.ttls)")
    parser.add_argument("--ontology", help="Ontology file (.ttls)")
    parser.add_argument(
        "--backend", help="Chat backend: http or mock:<script.json>", required=False
    )
    parser.add_argument("--top-k", type=int, help="Matches kept per term")
    parser.add_argument("--max-depth", type=int, help="Deepest quoted-triple nesting")
    parser.add_argument("--aliases", help="Alias table for entity minting (JSON)")
    parser.add_argument("--output-dir", help="Directory for written files")
    parser.add_argument(
        "-f",
        "--format",
        help="Output format: tsv|json|yaml",
        required=False,
        choices=["tsv", "json", "yaml"],
        default="tsv",
    )

    return parser


def _get_parser() -> argparse.ArgumentParser:
    # NOTE: nckg.commands imports this module, so it is loaded late
    import nckg.commands

    parser = _get_base_parser()
    return nckg.commands.extend_parser(parser)


def docs() -> argparse.ArgumentParser:
    """
    Provide a statically generated parser for sphinx only.
    """
    if "sphinx" not in sys.modules:
        sys.exit("Docs parser is only intended for build_sphinx")

    return _get_parser()


def main(argv: Optional[List[str]] = None) -> None:
    if argv is None:
        argv = sys.argv[1:]
    if "--version" in argv:
        print(nckg.__version__)
        sys.exit(0)

    parser = _get_parser()
    try:
        import argcomplete  # type: ignore

        argcomplete.autocomplete(parser)
    except Exception:
        pass
    args = parser.parse_args(argv)

    if args.debug:
        enable_debug()
    else:
        logging.basicConfig(
            level=logging.WARNING, format="%(levelname)s: %(name)s: %(message)s"
        )

    config_files = args.config
    command = args.command
    output = args.format
    overrides = {
        "store_path": args.store,
        "ontology_path": args.ontology,
        "backend": args.backend,
        "top_k": args.top_k,
        "max_depth": args.max_depth,
        "aliases_path": args.aliases,
        "output_dir": args.output_dir,
    }

    args_dict = vars(args)
    # Remove CLI behavior-related args
    for item in (
        "config",
        "debug",
        "command",
        "version",
        "format",
        "store",
        "ontology",
        "backend",
        "top_k",
        "max_depth",
        "aliases",
        "output_dir",
    ):
        args_dict.pop(item)

    try:
        config = nckg.config.AppConfig.from_parser(
            nckg.config.NckgConfigParser(config_files), overrides
        )
        if command in GATEWAY_COMMANDS:
            config.require_api_key()
    except nckg.config.ConfigError as e:
        die("Invalid configuration", e)

    import nckg.commands as commands

    try:
        commands.run(config, command, args_dict, output)
    except (NckgError, OSError, ValueError) as e:
        die("Impossible to run %s" % command, e)


if __name__ == "__main__":
    main()
