"""Transcendental entire functions built from z**2 + c: construction, dynamics and dimension estimates."""
