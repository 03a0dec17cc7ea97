"""Model harness: fine-tune a small decoder-only transformer on stexify
training lines and serve it over the translation wire protocol."""

__version__ = "0.1.0"
