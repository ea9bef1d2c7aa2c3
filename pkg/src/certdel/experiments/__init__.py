"""Bound-checking experiments, parameter selection and attacks."""
