"""Constrained pseudolikelihood estimation of Ising models.

Submodules: core (types and files), ensembles (matrix generators), sampler
(heat-bath and exact samplers), exact (2^n brute-force evaluators), mple
(objective and derivatives), projections (constraint sets), optimizer
(projected gradient descent), diagnostics (structural probes), cli.
"""

from . import (  # noqa: F401
    cli,
    core,
    diagnostics,
    ensembles,
    exact,
    mple,
    optimizer,
    projections,
    sampler,
)
from .core import (  # noqa: F401
    CouplingMatrix,
    IsingModel,
    SampleBatch,
    load_model,
    load_samples,
    matrix_norms,
    save_model,
    save_samples,
)
from .ensembles import EnsembleSpec, generate  # noqa: F401
from .optimizer import FitConfig, FitReport, fit_mple  # noqa: F401
from .projections import (  # noqa: F401
    ConstraintSet,
    antiferro_spike,
    membership,
    op_norm_ball,
    project,
    spectral_spread,
    width_ball,
)

__version__ = "0.1.0"
