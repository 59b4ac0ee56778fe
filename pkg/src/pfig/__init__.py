"""Mixed forgery image synthesis with fine-grained prompts, plus coarse/fine contrastive losses."""

__version__ = "0.1.0"
