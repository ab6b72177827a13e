"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An operation was called outside its documented contract."""


class ConfigError(ValueError):
    """A run configuration is inconsistent or incomplete."""


class UnsupportedRegimeError(ValueError):
    """The requested (scheme, order, dimension) combination is not supported."""


class BranchCutError(ArithmeticError):
    """A complex square root could not be continued unambiguously along a
    quadrature path (the radicand jumped across the negative real axis)."""
