"""Network digital twin toolkit.

Builds a multi-layer knowledge base (topology, network state, application
state) from RIPE Atlas measurements, trains four GNN architectures to
predict RTT and packet loss, and maps predictions to per-application QoE
estimates.
"""

__version__ = "0.1.0"
