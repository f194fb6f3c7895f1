"""
Federated learning simulator for wireless downlinks with heterogeneous coherence times.
"""
__version__ = "0.1.0"
