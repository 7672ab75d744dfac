"""Turn multi-dimensional datasets into interrelated undirected networks.

Rows of a cube become nodes with order, geographic and influence attributes.
Each arrival draws a set of potential neighbours by nearest-neighbour search
over already-arrived nodes and keeps each candidate edge with a probability
driven by the pair's influence values.
"""

from cubenet.graph import Graph, GenParams, GenTrace, NodeAttr, GraphError

__all__ = ["Graph", "GenParams", "GenTrace", "NodeAttr", "GraphError"]
__version__ = "0.1.0"
