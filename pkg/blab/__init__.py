from .core.blaschke import FiniteBlaschkeProduct  # noqa
from .core.moebius import MoebiusAutomorphism  # noqa

__version__ = "0.1.0"
