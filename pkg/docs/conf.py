"""Sphinx configuration."""

project = "activity-space"
author = "Christoph Alt"
copyright = "2024, Christoph Alt"
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "myst_parser",
]
autodoc_typehints = "description"
html_theme = "furo"
