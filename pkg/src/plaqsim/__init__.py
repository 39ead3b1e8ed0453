"""Plaquette gauge-model dynamics: exact circuit compilation, noisy
simulation, and error mitigation, verified against exact diagonalization."""

from .circuits import (
    Circuit,
    Gate,
    NonCommutingTerms,
    dump_circuit,
    entangler,
    evolution_circuit,
    load_circuit,
    metrics,
    model_circuit,
    term_evolution,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    ResultTable,
    exact_reference,
    run_experiment,
    write_csv,
    write_svg,
)
from .mitigation import (
    ResponseMatrix,
    ZnePoint,
    ZneResult,
    calibrate,
    fold,
    mitigate_readout,
    zne,
)
from .models import (
    GaugeModel,
    Geometry,
    SectorSpec,
    build_hamiltonian,
    enumerate_sector,
    gauss_operators,
    initial_state,
    winding_operators,
)
from .paulis import (
    PauliSum,
    PauliTerm,
    commutes,
    exact_evolve,
    loschmidt,
    sum_to_matrix,
    term_to_matrix,
)
from .simulator import (
    Counts,
    NoiseModel,
    child_seed,
    expectation_diagonal,
    run_ideal,
    run_noisy,
    sample,
)
from .transpile import (
    BUILTIN_TOPOLOGIES,
    DEVICE_QUANTUM_VOLUME,
    Topology,
    default_layout,
    get_topology,
    transpile,
    volume_report,
)

__version__ = "1.0.0"
