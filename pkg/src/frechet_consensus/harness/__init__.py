"""Configuration, random streams, serialization and the command line."""
