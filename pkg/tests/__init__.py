"""Tests for cqdd."""
