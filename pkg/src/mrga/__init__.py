"""MapReduce-style genetic algorithm over blocked populations."""
