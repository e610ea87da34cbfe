"""Black-box quantum measurement laboratory.

Simulate measurement apparatuses as opaque boxes, run the purification and
mixing thought experiments on them, reconstruct their POVMs from outcome
probabilities alone, and certify the Born rule for maximal measurements.
"""

__version__ = "0.1.0"

from .analysis import BornExtract, check_a_lambda, extract_born
from .devices import (
    BlackBoxDevice,
    EnsembleSource,
    ensemble_prob,
    kraus_povm,
    measure_prob,
    measure_sample,
)
from .errors import PovmLabError
from .experiments import (
    Fig1Setup,
    Fig2Setup,
    Fig3Setup,
    make_gate_g,
    make_phi_lambda,
    run_ensemble,
    run_fig1,
    run_fig2,
    run_fig3,
)
from .qstate import (
    DensityMatrix,
    PureState,
    SchmidtForm,
    SpaceShape,
    environment_unitary,
    random_pure,
    random_unitary,
    reduced_density,
    schmidt_decompose,
    tensor,
)
from .report import ExperimentReport
from .tomography import Povm, consistency_check, linear_form_fit, reconstruct, standard_probes
