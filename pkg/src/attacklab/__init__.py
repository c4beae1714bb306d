"""Attack-set selection for false-data injection on consensus networks."""
from attacklab.kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
