"""Front-of-pipeline adapter: corpus fetching and CoNLL-U conversion."""

__version__ = "0.1.0"
