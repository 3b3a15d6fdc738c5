"""Event-driven serverless cluster simulator with a learning resource
manager that harvests idle CPU/memory and reassigns it."""

from .model import Allocation, ClusterConfig, FunctionSpec, validate_allocation

__version__ = "0.1.0"
__all__ = ["Allocation", "ClusterConfig", "FunctionSpec", "validate_allocation"]
