"""Scenario configuration for the simulation runner."""
