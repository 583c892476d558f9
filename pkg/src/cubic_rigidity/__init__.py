"""Exact-arithmetic workbench for the birational rigidity of cubic surface fibrations."""
