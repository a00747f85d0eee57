"""Cloud gap filling for land-surface-temperature rasters using land cover."""

from .errors import (
    FullyOccludedError,
    LstFillError,
    MisalignmentError,
    NoReferencesError,
    ServiceabilityError,
)
from .evaluation import (
    OcclusionSpec,
    StationRecord,
    ablation_suite,
    broadband_emissivity,
    insitu_lst,
    insitu_validate,
    score,
    simulate_occlusion,
)
from .fusion import ReconstructionMode, ReconstructionResult, fuse, reconstruct
from .qa import OcclusionMask, QaPolicy, decode_qa, occlusion_factor
from .raster import BitfieldGrid, GeoRef, GridShape, LandCoverGrid, LstGrid, check_aligned, read_grid, write_grid
from .scene import Scene
from .spatial import SpatialParams, class_means, gaussian_weight, local_filter, spatial_channel
from .temporal import SceneCatalog, TemporalParams, class_shift, select_references, temporal_channel

__version__ = "0.1.0"

__all__ = [
    "ablation_suite",
    "BitfieldGrid",
    "broadband_emissivity",
    "check_aligned",
    "class_means",
    "class_shift",
    "decode_qa",
    "FullyOccludedError",
    "fuse",
    "gaussian_weight",
    "GeoRef",
    "GridShape",
    "insitu_lst",
    "insitu_validate",
    "LandCoverGrid",
    "local_filter",
    "LstFillError",
    "LstGrid",
    "MisalignmentError",
    "NoReferencesError",
    "occlusion_factor",
    "OcclusionMask",
    "OcclusionSpec",
    "QaPolicy",
    "read_grid",
    "reconstruct",
    "ReconstructionMode",
    "ReconstructionResult",
    "Scene",
    "SceneCatalog",
    "score",
    "select_references",
    "ServiceabilityError",
    "simulate_occlusion",
    "spatial_channel",
    "SpatialParams",
    "StationRecord",
    "temporal_channel",
    "TemporalParams",
    "write_grid",
]
