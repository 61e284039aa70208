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

import functools
from typing import (
    Any,
    Callable,
    cast,
    Iterable,
    List,
    Optional,
    Type,
    TYPE_CHECKING,
    TypeVar,
    Union,
)


class NckgError(Exception):
    def __init__(
        self,
        error_message: Union[str, bytes] = "",
        response_code: Optional[int] = None,
        response_body: Optional[bytes] = None,
    ) -> None:

        Exception.__init__(self, error_message)
        # Http status code, when the error comes from the chat backend
        self.response_code = response_code
        # Full http response
        self.response_body = response_body
        try:
            if TYPE_CHECKING:
                assert isinstance(error_message, bytes)
            self.error_message = error_message.decode()
        except Exception:
            if TYPE_CHECKING:
                assert isinstance(error_message, str)
            self.error_message = error_message

    def __str__(self) -> str:
        if self.response_code is not None:
            return "{0}: {1}".format(self.response_code, self.error_message)
        else:
            return "{0}".format(self.error_message)


class StoreError(NckgError):
    pass


class DepthExceeded(StoreError):
    pass


class LiteralSubject(StoreError):
    pass


class InvalidTerm(StoreError):
    pass


class EmptyStore(StoreError):
    pass


class NckgParsingError(NckgError):
    pass


class ParseError(NckgParsingError):
    """A syntax error at a 1-based line/column position of the input."""

    def __init__(
        self,
        message: str,
        line: int = 1,
        column: int = 1,
        snippet: str = "",
        source: Optional[str] = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
        self.snippet = snippet
        self.source = source

    def __str__(self) -> str:
        location = "{}:{}".format(self.line, self.column)
        if self.source:
            location = "{}:{}".format(self.source, location)
        if self.snippet:
            return "{}: {} (near {!r})".format(location, self.message, self.snippet)
        return "{}: {}".format(location, self.message)


class UnknownPrefix(ParseError):
    pass


class QueryError(NckgError):
    pass


class AnchorKindMismatch(QueryError):
    pass


class OntologyError(NckgError):
    pass


class CyclicHierarchy(OntologyError):
    pass


class UnknownUpperClass(OntologyError):
    pass


class GatewayError(NckgError):
    pass


class GatewayTimeoutError(GatewayError):
    pass


class GatewayHttpError(GatewayError):
    pass


class GatewayAuthenticationError(GatewayHttpError):
    pass


class MalformedResponse(GatewayError):
    pass


class MockMiss(GatewayError):
    pass


class PromptError(NckgError):
    pass


class UnknownTemplate(PromptError):
    pass


class MissingSlot(PromptError):
    pass


class TermCountMismatch(PromptError):
    pass


class ExtractionError(NckgError):
    pass


class EmptyExtraction(ExtractionError):
    pass


class ExtractionStepError(ExtractionError):
    pass


class StatusMissing(ExtractionError):
    pass


class NotApproved(ExtractionError):
    pass


class ReviewError(NckgError):
    pass


class EmptyRetrieval(ReviewError):
    pass


class VerdictParseFailure(ReviewError):
    def __init__(self, error_message: str = "", raw_response: str = "") -> None:
        super().__init__(error_message)
        self.raw_response = raw_response


class EvaluationError(NckgError):
    pass


class LengthMismatch(EvaluationError):
    pass


class MissingVerdict(EvaluationError):
    def __init__(self, clause_ids: Iterable[str]) -> None:
        self.clause_ids: List[str] = sorted(clause_ids)
        super().__init__("Missing verdict for: %s" % ", ".join(self.clause_ids))


# For an explanation of how these type-hints work see:
# https://mypy.readthedocs.io/en/stable/generics.html#declaring-decorators
#
# The goal here is that functions which get decorated will retain their types.
__F = TypeVar("__F", bound=Callable[..., Any])


def on_gateway_error(
    error: Type[Exception], context: Optional[str] = None
) -> Callable[[__F], __F]:
    """Manage GatewayError exceptions.

    This decorator function can be used to catch GatewayError exceptions
    raise specialized exceptions instead.

    Args:
        error(Exception): The exception type to raise -- must inherit from
            NckgError
        context(str): Optional prefix added to the error message (e.g. the
            extraction step that issued the call)
    """

    def wrap(f: __F) -> __F:
        @functools.wraps(f)
        def wrapped_f(*args: Any, **kwargs: Any) -> Any:
            try:
                return f(*args, **kwargs)
            except GatewayError as e:
                message = e.error_message
                if context:
                    message = "%s: %s" % (context, message)
                raise error(message, e.response_code, e.response_body) from e

        return cast(__F, wrapped_f)

    return wrap
