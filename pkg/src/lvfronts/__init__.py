"""Periodic bistable fronts and entire solutions of a time-periodic competition-diffusion system."""
