"""Structured low-rank reconstruction of two-polarity EPI k-space (slm-ghost)."""
