"""Exception types shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EmptySectorError(DomainError):
    """The requested (N, L, j) sector carries no spin-j copies."""


class ResourceError(RuntimeError):
    """A Hilbert-space dimension exceeds the configured guard."""

    def __init__(self, dimension: int, guard: int, what: str = "basis"):
        self.dimension = dimension
        self.guard = guard
        super().__init__(
            f"{what} dimension {dimension} exceeds the dimension guard {guard} "
            f"(raise it with NSS_DIM_GUARD or the guard argument)"
        )
