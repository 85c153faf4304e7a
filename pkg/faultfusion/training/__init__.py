"""Triplet mining, the composite objective, the training loop and evaluation metrics."""
