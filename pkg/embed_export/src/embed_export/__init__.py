"""Standalone corpus-to-embedding-file exporter for the marro toolkit."""

from .encoders import EncoderError, HashEncoder, HfEncoder, StEncoder, make_encoder
from .exporter import (ExportError, ExportJob, export, projection_matrix,
                       read_corpus_sentences, write_embedding_file)

__version__ = "0.1.0"
