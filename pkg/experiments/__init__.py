"""Experiment drivers: ablation study, fusion benchmark and sweep plots."""
