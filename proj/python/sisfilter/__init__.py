"""Chain interconnection solver and missing-measurement filter."""

try:
    from ._sisfilter import *  # noqa: F401,F403
    from ._sisfilter import SisError
except ImportError:  # build tree: the extension sits next to, not inside, the package
    from _sisfilter import *  # noqa: F401,F403
    from _sisfilter import SisError

__all__ = [
    "SignalDims",
    "SubsystemBlock",
    "ChainModel",
    "SisError",
    "validate_chain",
    "partition_g",
    "phi_beta",
    "solve_interconnect",
    "monolithic_solve",
    "gains",
    "simulate",
    "run_scenario",
    "run_cli",
]
