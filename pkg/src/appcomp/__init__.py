"""Application-aware quantum circuit compilation toolkit."""
