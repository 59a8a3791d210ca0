"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input: bad sizes, non-traceless matrices, invalid root subsets."""


class DomainError(ValueError):
    """Input outside the domain of an operation (singular configuration, outside U)."""


class PoleError(DomainError):
    """Evaluation at (or too close to) a pole.

    ``nearest`` carries the offending lattice / pi*Z point.
    """

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest


class ContractError(ValueError):
    """A precondition stated by the caller-facing contract was violated."""


class BreakdownError(RuntimeError):
    """Matrix factorization breakdown (eigenvalue collision) of an exact solver.

    Attributes: ``time`` (estimated collision time), ``gap`` (minimal eigenvalue
    gap found), ``partial`` (trajectory computed before breakdown, may be None),
    ``factors`` (factorization path so far, may be None).
    """

    def __init__(self, message, time=None, gap=None, partial=None, factors=None):
        super().__init__(message)
        self.time = time
        self.gap = gap
        self.partial = partial
        self.factors = factors


class GridError(RuntimeError):
    """A sampled path is too coarse to track branches/continuations reliably."""
