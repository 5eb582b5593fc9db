"""Gate-resolved Monte Carlo of a self-differencing gated InGaAs APD."""

from .sources import (
    SourceSpec,
    PulseTrain,
    MultiplexedTrain,
    ParameterError,
    GeometryError,
    sample_photon_number,
    sample_photon_numbers,
    attenuate,
    beamsplit,
    build_double_pulse_train,
    build_periodic_train,
    apply_amzi,
)
from .detector import (
    DetectorSpec,
    DetectorState,
    AvalancheTrace,
    ClickTrace,
    avalanche_probability,
    step_gate,
    self_difference,
    run_detector,
)

__version__ = "0.1.0"
