"""Low-resource ASR toolkit: lexicon expansion, VAD, augmentation, ROVER and scoring."""

import logging

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())

from .augment import AugmentSpec, SpecAugmentSpec
from .dsp import AudioBuffer, FeatureMatrix
from .expand import SMOKE_CONFIG, ExpansionConfig, ExpansionReport, expand_lexicon
from .fusion import Hypothesis, VoteConfig, WordTransitionNetwork, rover
from .g2p import G2PModel, apply_g2p, apply_p2g, train_g2p
from .lexicon import Corpus, LexEntry, Lexicon
from .ngram import NGramModel, train_ngram
from .scoring import NormPolicy, ScoreReport, score_corpus, wer
from .vad import OsfVadConfig, Segment, Segmentation, osf_vad

__all__ = [
    "AudioBuffer", "FeatureMatrix", "AugmentSpec", "SpecAugmentSpec",
    "SMOKE_CONFIG", "ExpansionConfig", "ExpansionReport", "expand_lexicon",
    "Hypothesis", "VoteConfig", "WordTransitionNetwork", "rover",
    "G2PModel", "apply_g2p", "apply_p2g", "train_g2p",
    "Corpus", "LexEntry", "Lexicon", "NGramModel", "train_ngram",
    "NormPolicy", "ScoreReport", "score_corpus", "wer",
    "OsfVadConfig", "Segment", "Segmentation", "osf_vad",
]
