from .experiments import (
    ExperimentSpec,
    SuccessCurve,
    fft_unit_calibration,
    regularity_pass_rate,
    run_image_recovery,
    run_success_sweep,
)
from .export import export_results
from .images import ImageProblem, ingest_image, write_image
from .signals import SignalModel, generate_signal
