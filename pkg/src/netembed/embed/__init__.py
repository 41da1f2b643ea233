from .base import (
    SIMILARITY_KINDS,
    Embedding,
    TrainConfig,
    context_path,
    fix_signs,
    pair_scores,
    procrustes_distance,
    read_word2vec,
    similarity,
    write_word2vec,
)
from .factorization import gf_loss, gf_loss_and_grad, graph_factorization
from .grarep import factorize, grarep, shifted_log_matrix, transition_powers
from .line import line_edge_term, line_loss, line_loss_and_grad, train_line
from .lsm import fit_latent_space, lsm_grad, lsm_log_likelihood
from .methods import METHOD_NAMES, METHODS, embed_graph
from .skipgram import ns_loss_and_grad, train_skipgram, unigram_noise
from .spectral import spectral_embedding

__all__ = [
    "SIMILARITY_KINDS", "Embedding", "TrainConfig", "context_path", "fix_signs", "pair_scores",
    "procrustes_distance", "read_word2vec", "similarity", "write_word2vec", "gf_loss",
    "gf_loss_and_grad", "graph_factorization", "factorize", "grarep", "shifted_log_matrix",
    "transition_powers", "line_edge_term", "line_loss", "line_loss_and_grad", "train_line",
    "fit_latent_space", "lsm_grad", "lsm_log_likelihood", "METHOD_NAMES", "METHODS",
    "embed_graph", "ns_loss_and_grad", "train_skipgram", "unigram_noise", "spectral_embedding",
]
