"""Multi-modal neighborhood contrastive learning for paired clinical text and vitals.

Subpackages:
  corpus      data model, file formats, preprocessing, synthetic generator
  sampling    target times, windows, contrastive batch assembly
  encoders    GRU tower, hashed bag-of-words text tower, projections
  objective   soft neighborhood and the contrastive losses
  evaluation  task labels, zero-shot scoring, linear probes, metrics
  harness     config, training loop, evaluation driver, ablations, CLI
"""

__version__ = "0.1.0"
