"""Latent order logistic (LOLOG) network models."""

from .graph import Dyad, Graph, dyad_at, dyad_index, shared_neighbors
from .ordering import EdgeOrder, OrderSpec, log_prob_order, sample_order
from .sampler import ModelSpec, SampleDraw, cond_log_lik, edge_prob, sample_batch, sample_graph
from .terms import TermSpec, make_term

__all__ = [
    "Dyad", "Graph", "dyad_at", "dyad_index", "shared_neighbors",
    "EdgeOrder", "OrderSpec", "log_prob_order", "sample_order",
    "ModelSpec", "SampleDraw", "cond_log_lik", "edge_prob", "sample_batch", "sample_graph",
    "TermSpec", "make_term",
]
