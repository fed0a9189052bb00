"""Rhetorical-role sequence labeling for legal documents.

Attention-enriched BiLSTM-CRF taggers (optionally trained jointly with a
label-shift auxiliary task) together with the surrounding machinery: corpus
handling, inter-annotator agreement, cross-validated evaluation, and prompt
construction for completion-model baselines.
"""

from .annotation import (AgreementReport, AnnotationSet, corpus_agreement, load_annotations,
                         majority_gold, pair_agreement)
from .corpus import (Corpus, CorpusError, Document, FoldSplit, NUM_ROLES, ROLES,
                     RhetoricalRole, Sentence, ShiftSequence, corpus_stats, derive_shifts,
                     load_corpus, make_folds, shift_rate, write_corpus)
from .crf import CrfParams, brute_force_oracle, log_partition, nll, path_score, viterbi
from .embeddings import (EmbeddingFile, HashEmbedder, MissingEmbedding, embed_document,
                         load_embedding_file, write_embedding_file)
from .models import (MarroConfig, MarroModel, build_model, forward_main, forward_shift,
                     parameter_count)
from .prompts import (CompletionParams, Exemplar, LabelCard, MockClient, build_few_shot,
                      build_zero_shot, default_deck, parse_label, run_llm_eval,
                      select_exemplars)
from .synth import synth_corpus, write_synth_embeddings
from .tensor import Rng, Tensor, grad_check
from .training import (CvResult, MetricsReport, TrainerConfig, compute_metrics,
                       cross_validate, evaluate, t_test, train)

__version__ = "0.1.0"
