"""Sequence-labeling workbench for cybersecurity vulnerability text.

A bidirectional LSTM-CRF tagger and a feature-template CRF baseline,
together with corpus conversion/splitting tools, a skip-gram embedding
pretrainer, and per-entity evaluation reports. The estimators in
:mod:`cvetag.estimators` follow the scikit-learn fit/predict protocol.
"""

from .corpus import (ConversionError, CorpusSplit, EntitySpan, ParseError,
                     Sentence, TagSet, Token, convert_json_corpus,
                     extract_spans, heuristic_pos_tag, parse_conll2000,
                     parse_crf_conll, repair_iob, spans_to_tags, split_corpus,
                     write_conll2000, write_crf_conll)
from .crf import (ChainCrfParams, FeatureCrfModel, FeatureVector,
                  extract_features, forward_logZ, nll_and_gradient,
                  posterior_marginals, score_sequence, train_baseline,
                  viterbi_decode)
from .bilstm import (BiLstmParams, LstmCellParams, bilstm_forward,
                     bptt_backward, lstm_cell_forward, lstm_sequence_forward)
from .embeddings import (EmbeddingTable, Vocabulary, build_vocab, cosine,
                         load_text, lookup, normalize_word, save_text,
                         train_skipgram)
from .estimators import BiLstmCrfTagger, FeatureCrfTagger, SkipGramEmbeddings
from .metrics import (EvalReport, build_report, entity_prf, macro_average,
                      render_table, token_accuracy)
from .numerics import (ClippedSgd, clipped_sgd_step, default_rng,
                       finite_diff_check, init_matrix, log_sum_exp, sigmoid,
                       tanh)
from .serialize import CheckpointError
from .tagger import (TaggerModel, build_model, forward_lattice,
                     load_checkpoint, predict_tags, save_checkpoint, train)
from .training import EpochRecord, TrainLog

__version__ = "0.1.0"
