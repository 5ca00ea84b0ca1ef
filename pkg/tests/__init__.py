"""flatsonium tests."""
