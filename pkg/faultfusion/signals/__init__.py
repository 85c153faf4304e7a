"""Signal sources (synthetic and CSV), segmentation, datasets and robustness perturbations."""
