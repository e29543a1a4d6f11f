"""Containers package for the application."""
