"""Grain Lab - simulation and estimation toolkit for germ-grain random closed sets."""
