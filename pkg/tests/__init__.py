"""Tests for the ilw_lab package."""
