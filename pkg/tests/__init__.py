"""
Unit tests for the WGM tuning toolkit.
"""
