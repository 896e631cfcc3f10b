"""Cross-validation, scoring, experiment drivers, and report rendering."""
