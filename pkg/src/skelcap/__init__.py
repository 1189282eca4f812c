"""Skeleton keypoint sequences to text: preprocessing, data, model, metrics."""

from .corpus import (
    CaptionSample,
    SplitResult,
    corpus_baseline,
    coord_stats,
    read_samples,
    split_sign_agnostic,
    split_signer_agnostic,
    write_samples,
)
from .errors import SkelcapError
from .metrics import MetricReport, bleu_composite, bleu_individual, evaluate, rouge_l, rouge_n
from .model import Batch, ModelConfig, Seq2SeqModel, forward, init_model, loss, param_count
from .skeleton import (
    NormalizationParams,
    PreprocessedFrame,
    SkeletonFrame,
    denormalize_frame,
    flatten_frame,
    impute_body,
    impute_hands,
    normalize_frame,
    preprocess_sequence,
    unflatten_frame,
)
from .synth import HandShape, MovementType, SyntheticSignSpec, describe, synth_generate
from .tokenizer import Vocabulary, build_vocab, decode, encode
from .training import (
    AdamState,
    TrainConfig,
    backward_and_step,
    gradient_check,
    greedy_decode,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
