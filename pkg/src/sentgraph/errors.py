"""Exception taxonomy shared across the package.

Exit codes mirror the CLI contract: 2 input error, 3 contract violation,
4 capacity error.
"""


class SentGraphError(Exception):
    exit_code = 1


class InputError(SentGraphError):
    """Malformed or out-of-range caller input."""

    exit_code = 2


class ContractViolation(SentGraphError):
    """An operation precondition or invariant was violated."""

    exit_code = 3


class CapacityError(SentGraphError):
    """A configured size cap was exceeded."""

    exit_code = 4


class ParseError(ContractViolation):
    """Token stream rejected by the grammar.

    Carries the 0-based token position and a stable machine-readable code
    such as E_GAP_INDEX or E_DUP_EDGE.
    """

    def __init__(self, message: str, pos: int, code: str):
        super().__init__(f"{code} at token {pos}: {message}")
        self.pos = pos
        self.code = code


class GrammarViolation(ParseError):
    """Raised by the decoder automaton when a token is not in legal_next."""
