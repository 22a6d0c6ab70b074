"""Lymphoid infiltration profiling across tumor margins in histology slides."""
from .curve_match import MatchReport, cdtw_distance, rank_matches, znorm
from .density_profile import (
    FixedWindowSeries,
    InfiltrationCurve,
    infiltration_curve,
    profile_labels,
    to_fixed_window,
)
from .distance_field import SignedDistanceMap, signed_edt
from .eval_metrics import ObjectDiceReport, object_level_dice, points_to_disks
from .slide_model import (
    AnnotationSet,
    Polygon,
    RegionLabel,
    Resample,
    SlideMeta,
    Stain,
    TissueLabelMask,
    rasterize_annotations,
    rescale_grid,
)
from .stain import LymphocyteMask, StainMatrix, dab_lymphocyte_mask, deconvolve_od, rgb_to_od
from .synth_oracle import ProfileSpec, SineMargin, StraightMargin, SyntheticCase, generate_case, oracle_curve

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet", "FixedWindowSeries", "InfiltrationCurve", "LymphocyteMask", "MatchReport",
    "ObjectDiceReport", "Polygon", "ProfileSpec", "RegionLabel", "Resample", "SignedDistanceMap",
    "SineMargin", "SlideMeta", "Stain", "StainMatrix", "StraightMargin", "SyntheticCase",
    "TissueLabelMask", "cdtw_distance", "dab_lymphocyte_mask", "deconvolve_od", "generate_case",
    "infiltration_curve", "object_level_dice", "oracle_curve", "points_to_disks", "profile_labels",
    "rank_matches", "rasterize_annotations", "rescale_grid", "rgb_to_od", "signed_edt",
    "to_fixed_window", "znorm",
]
