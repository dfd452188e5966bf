"""Exception hierarchy with stable machine-readable codes and exit codes.

Exit-code convention: 0 success, 1 usage error, 2 data-assumption
violation, 3 internal invariant failure.
"""

from __future__ import annotations


class OwbError(Exception):
    """Base class for all package errors."""

    code = "owb-error"
    exit_code = 1


class UsageError(OwbError):
    """Bad invocation: unknown flags, unreadable or malformed inputs."""

    code = "usage"
    exit_code = 1


class ParseError(UsageError):
    """Malformed record in a votes file."""

    code = "parse-error"

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateKey(UsageError):
    """The same (persona_id, round, petal_id) appears twice."""

    code = "duplicate-key"

    def __init__(self, line: int, key: tuple):
        self.line = line
        self.key = key
        super().__init__(f"line {line}: duplicate record for {key!r}")


class InconsistentCluster(UsageError):
    """A persona_id is listed under two different cluster_ids."""

    code = "inconsistent-cluster"

    def __init__(self, persona_id: str, first: str, second: str):
        self.persona_id = persona_id
        super().__init__(
            f"persona {persona_id!r} assigned to clusters {first!r} and {second!r}"
        )


class DataAssumptionError(OwbError):
    """The minimal-data assumption does not hold for the input."""

    code = "data-assumption"
    exit_code = 2


class EmptyPetal(DataAssumptionError):
    """A petal has no finite observation anywhere in the tensor."""

    code = "empty-petal"

    def __init__(self, petal: int, petal_id: str | None = None):
        self.petal = petal
        self.petal_id = petal_id
        label = petal_id if petal_id is not None else str(petal)
        super().__init__(f"petal {label} has no finite observations")


class NoDataAnywhere(DataAssumptionError):
    """Every cell of the tensor is missing; nothing can be imputed."""

    code = "no-data-anywhere"

    def __init__(self):
        super().__init__("tensor contains no finite values at all")


class InvariantError(OwbError):
    """An internal invariant failed; indicates a bug, not bad input."""

    code = "invariant"
    exit_code = 3


class NonPositiveVariance(InvariantError):
    """A variance input was zero or negative (upstream flooring failed)."""

    code = "non-positive-variance"

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"variance[{index}] = {value!r} is not strictly positive")
