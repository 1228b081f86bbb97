"""Built-in experiment configurations (JSON, loaded by name)."""
