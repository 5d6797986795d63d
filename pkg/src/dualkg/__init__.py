"""Joint sphere / Poincare-ball embeddings for two-view knowledge graphs."""
