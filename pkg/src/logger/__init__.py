"""Logger init."""
