"""Test suite for the macp package."""
