"""Registry, check base class, configuration schema and execution helpers."""
