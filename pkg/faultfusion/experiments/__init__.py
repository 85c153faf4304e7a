"""Commands composed from the pipeline: ablation sweeps, robustness sweeps, run bookkeeping and reports."""
