"""Training, prior, generation, transfer, checkpoints, configuration."""

from .config import (
    DESK_EMB_SIZES,
    DR_MODES,
    PAPER_EMB_SIZES,
    PRESETS,
    TrainConfig,
    apply_overrides,
    base_config,
    desk_config,
    load_config,
    paper_config,
)
from .gradsuite import (
    TOLERANCE,
    full_loss_grad_report,
    gradcheck_suite,
    primitive_grad_report,
)
from .model import MusErModel
from .train import (
    BatchSampler,
    StepResult,
    TokenCorpus,
    build_corpus,
    prime_codebook,
    teacher_accuracy,
    train,
    train_step,
)
from .prior import (
    N_EMOTIONS,
    PriorModel,
    corpus_codes,
    prior_loss,
    sample_codes,
    train_prior,
)
from .transfer import element_transfer, transfer_sequence
from .checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    load_checkpoint,
    load_model,
    load_prior,
    restore_rng,
    rng_state,
    save_checkpoint,
    save_model,
    save_prior,
)
from .synth import (
    OVERFIT_LEN,
    PLANTED_LEN,
    make_overfit_corpus,
    make_planted_corpus,
)

__all__ = [
    "BatchSampler", "DESK_EMB_SIZES", "DR_MODES", "FORMAT_VERSION", "MAGIC",
    "MusErModel",
    "TOLERANCE",
    "full_loss_grad_report",
    "gradcheck_suite",
    "primitive_grad_report", "N_EMOTIONS", "OVERFIT_LEN", "PAPER_EMB_SIZES", "PLANTED_LEN",
    "PRESETS", "PriorModel", "StepResult", "TokenCorpus", "TrainConfig",
    "apply_overrides", "base_config", "build_corpus", "corpus_codes",
    "desk_config", "element_transfer", "load_checkpoint", "load_config",
    "load_model", "load_prior", "make_overfit_corpus", "make_planted_corpus",
    "paper_config", "prime_codebook", "prior_loss", "restore_rng", "rng_state", "sample_codes",
    "save_checkpoint", "save_model", "save_prior", "teacher_accuracy",
    "train", "train_prior", "train_step", "transfer_sequence",
]
