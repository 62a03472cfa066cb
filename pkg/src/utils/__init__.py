"""Helpers shared by the simulators and the scenario runner."""
