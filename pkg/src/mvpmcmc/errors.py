"""Exception types shared across the simulation and inference layers."""

__all__ = ["NumericsError"]


class NumericsError(RuntimeError):
    """Numerical failure: state blow-up, vanished weights, degenerate fits.

    Carries a human-readable message naming the grid time or observation
    index where the failure occurred. The CLI maps this to exit code 2.
    """
