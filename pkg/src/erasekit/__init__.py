"""Erasure of quantum states by learning them: simulators, learners and work ledgers."""

__version__ = "0.1.0"
SCHEMA_VERSION = "1"

from ._accel import BACKEND, USE_NUMBA  # noqa: E402
from .qcore import (  # noqa: E402
    CircuitDescription,
    ProductState,
    QuantumState,
    QubitLayout,
    apply_circuit,
    fidelity,
    trace_distance,
)
from .thermo import (  # noqa: E402
    BathSpec,
    ErasureReport,
    WorkLedger,
    classical_erase,
    compress_to_erase,
    extract_work,
    learning_to_erase,
)

__all__ = [
    "BACKEND", "USE_NUMBA", "SCHEMA_VERSION", "__version__",
    "CircuitDescription", "ProductState", "QuantumState", "QubitLayout",
    "apply_circuit", "fidelity", "trace_distance",
    "BathSpec", "ErasureReport", "WorkLedger", "classical_erase", "compress_to_erase",
    "extract_work", "learning_to_erase",
]
