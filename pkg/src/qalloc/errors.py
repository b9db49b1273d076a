"""Exception types shared across the package.

Bad arguments raise plain ``ValueError``; the two classes below mark the
conditions the CLI maps to dedicated exit codes.
"""


class InfeasibleError(ValueError):
    """Requested qubits exceed what the cloud can host."""

    def __init__(self, demand, capacity, message=None):
        self.demand = demand
        self.capacity = capacity
        self.shortfall = demand - capacity
        if message is None:
            message = (
                f"demand {demand} exceeds total capacity {capacity} "
                f"(shortfall {self.shortfall})"
            )
        super().__init__(message)


class SizeGuardError(RuntimeError):
    """An exhaustive enumeration would exceed its configured size limit."""

    def __init__(self, what: str, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{what}: {count} candidates exceeds limit {limit}")
