"""Exception types shared across the package."""


class SignatureError(ValueError):
    """Subsystem labels or dimensions do not line up."""


class HermiticityError(ValueError):
    """An operator that must be Hermitian is not (within tolerance)."""


class PhysicalityError(ValueError):
    """A state or density operator fails normalization or positivity."""


class DegenerateProjectionError(ValueError):
    """A (anti)symmetrizing projection annihilated the input ket."""


class LocalityError(ValueError):
    """An operator acts on a subsystem it was declared not to touch."""


class NodeError(ValueError):
    """Quantum potential requested at a node of the amplitude."""


class InsufficientDataError(ValueError):
    """Too few rounds to form the requested statistic."""


class ConfigError(ValueError):
    """Invalid scenario configuration."""
