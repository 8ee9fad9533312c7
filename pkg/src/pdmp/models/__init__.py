"""Concrete models: the Morris-Lecar neuron and a telegraph oracle."""
