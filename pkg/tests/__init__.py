"""hillgrowth test suite."""
