"""Handlers package for the application."""
