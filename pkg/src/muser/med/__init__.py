"""Element-wise latent regularization: slicing, reduction, sign alignment."""

from .slicing import (
    N_ELEMENTS,
    element_bounds,
    slice_array,
    slice_latent,
    slice_width,
)
from .dr import DrModel, dr_reduce
from .regularize import (
    element_distance_matrix,
    latent_distance_matrix,
    regularization_loss,
)

__all__ = [
    "N_ELEMENTS", "element_bounds", "slice_array", "slice_latent",
    "slice_width", "DrModel", "dr_reduce", "element_distance_matrix",
    "latent_distance_matrix", "regularization_loss",
]
