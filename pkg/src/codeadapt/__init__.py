"""In-scope validation and semantic-preserving adaptation of code inputs."""

__version__ = "0.1.0"
