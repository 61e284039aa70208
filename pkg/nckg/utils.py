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

import json
import os
import re
import tempfile
from typing import Any, Dict, Iterable, Iterator, List, Tuple, Union


def atomic_write(path: str, content: Union[str, bytes]) -> None:
    """Write ``content`` to ``path`` through a temporary file and a rename.

    Readers never observe a partially written file.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(content, bytes) else "w"
    fd, tmp_path = tempfile.mkstemp(
        dir=directory, prefix=".%s." % os.path.basename(path), suffix=".tmp"
    )
    try:
        kwargs: Dict[str, Any] = {} if mode == "wb" else {"encoding": "utf-8"}
        with os.fdopen(fd, mode, **kwargs) as f:
            f.write(content)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def dumps_jsonl(records: Iterable[Dict[str, Any]]) -> str:
    return "".join(
        json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records
    )


def write_jsonl(path: str, records: Iterable[Dict[str, Any]]) -> None:
    atomic_write(path, dumps_jsonl(records))


def iter_jsonl(path: str) -> Iterator[Tuple[int, Union[Dict[str, Any], Exception]]]:
    """Yield ``(line_number, record)`` for each non-blank line.

    A line that is not a JSON object yields the decoding exception instead, so
    callers can record the failure and carry on.
    """
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("line %d is not a JSON object" % lineno)
            except ValueError as e:
                yield lineno, e
            else:
                yield lineno, record


def read_jsonl(path: str) -> List[Dict[str, Any]]:
    """Read every record, raising on the first malformed line."""
    records = []
    for lineno, record in iter_jsonl(path):
        if isinstance(record, Exception):
            raise ValueError("%s:%d: %s" % (path, lineno, record))
        records.append(record)
    return records


def excerpt(body: Union[str, bytes, None], limit: int = 200) -> str:
    if body is None:
        return ""
    if isinstance(body, bytes):
        body = body.decode("utf-8", errors="replace")
    body = " ".join(body.split())
    if len(body) > limit:
        return body[: limit - 3] + "..."
    return body


def remove_none_from_dict(data: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in data.items() if v is not None}


def word_count(text: str) -> int:
    return len(text.split())


def write_json(path: str, data: Any) -> None:
    atomic_write(
        path, json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    )


def safe_filename(name: str) -> str:
    """``name`` with every character outside ``[\\w.-]`` replaced by ``_``."""
    return re.sub(r"[^\w.\-]", "_", name)
