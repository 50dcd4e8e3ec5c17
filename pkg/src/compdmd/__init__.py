"""Exact DMD for compartmental systems."""
