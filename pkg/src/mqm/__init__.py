"""Absorption-current arrival statistics: quantum detectors and their Brownian reference."""
