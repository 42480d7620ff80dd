"""Desk-scale coastal flood risk pipeline: storm surge envelopes, flood-zone
classification and mortgage-market exposure analytics."""

__version__ = "0.1.0"
