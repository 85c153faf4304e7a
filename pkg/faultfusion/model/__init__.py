"""Encoders, hypergraph construction, HGNN refinement, attention fusion and the assembled network."""
