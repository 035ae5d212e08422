"""Automatic sleep staging from EEG spectral band powers.

The pipeline: parse a polygraphic recording (EDF), cut the EEG into 30 s
epochs, compute each epoch's relative power in the five classical bands
(delta, theta, alpha, sigma, beta), and classify epochs into Awake, S1-S4,
and REM with a small from-scratch multilayer perceptron trained by
backpropagation with early stopping. Evaluation mirrors clinical practice:
confusion matrices against an expert hypnogram and sleep-architecture
reports. A synthetic-signal generator with closed-form band composition
provides oracles for every stage of the pipeline.
"""

__version__ = "0.1.0"

from .dataset import (
    CLASSIFIER_STAGES,
    SLEEP_STAGES,
    Hypnogram,
    LabeledDataset,
    SleepStage,
    build_dataset,
    parse_hypnogram,
    read_hypnogram,
    stratified_split,
    stratified_split_indices,
    write_hypnogram,
)
from .edf import (
    EdfError,
    EdfHeader,
    SampleSeries,
    SignalSpec,
    default_signal_spec,
    parse_header,
    read_signal,
    serialize_header,
    write_recording,
)
from .metrics import (
    ArchitectureReport,
    ConfusionMatrix,
    architecture_report,
    confusion_matrix,
    overall_accuracy,
    per_class_success,
    render_architecture,
    render_confusion,
)
from .mlp import (
    CvReport,
    Mlp,
    MlpClassifier,
    TrainConfig,
    TrainReport,
    cross_validate,
    fit,
    forward,
    init_mlp,
    predict,
    read_model,
    train_step,
    write_model,
)
from .spectral import (
    BANDS,
    BAND_NAMES,
    BandPowerTransform,
    Epoch,
    SpectralFeatures,
    Spectrum,
    UnclassifiableEpochError,
    extract_features,
    power_spectrum,
    read_features,
    relative_band_powers,
    segment_epochs,
    write_features,
)
from .synth import (
    DEMO_NIGHT_COUNTS,
    StageProfile,
    default_profiles,
    demo_night,
    read_profiles,
    separable_profiles,
    synth_dataset,
    synth_epoch,
    synth_recording,
    write_profiles,
)

__all__ = [
    "__version__",
    # dataset
    "CLASSIFIER_STAGES", "SLEEP_STAGES", "Hypnogram", "LabeledDataset", "SleepStage",
    "build_dataset", "parse_hypnogram", "read_hypnogram", "stratified_split",
    "stratified_split_indices", "write_hypnogram",
    # edf
    "EdfError", "EdfHeader", "SampleSeries", "SignalSpec", "default_signal_spec",
    "parse_header", "read_signal", "serialize_header", "write_recording",
    # metrics
    "ArchitectureReport", "ConfusionMatrix", "architecture_report", "confusion_matrix",
    "overall_accuracy", "per_class_success", "render_architecture", "render_confusion",
    # mlp
    "CvReport", "Mlp", "MlpClassifier", "TrainConfig", "TrainReport", "cross_validate",
    "fit", "forward", "init_mlp", "predict", "read_model", "train_step", "write_model",
    # spectral
    "BANDS", "BAND_NAMES", "BandPowerTransform", "Epoch", "SpectralFeatures", "Spectrum",
    "UnclassifiableEpochError", "extract_features", "power_spectrum", "read_features",
    "relative_band_powers", "segment_epochs", "write_features",
    # synth
    "DEMO_NIGHT_COUNTS", "StageProfile", "default_profiles", "demo_night", "read_profiles",
    "separable_profiles", "synth_dataset", "synth_epoch", "synth_recording", "write_profiles",
]
