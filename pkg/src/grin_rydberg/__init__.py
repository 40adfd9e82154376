"""Luneburg GRIN lens design and Rydberg RF receiver sensitivity toolkit."""

from .errors import (ConfigurationError, DataError, DomainError, GrinRydbergError,
                     InsufficientBundleError, ParseError, SingularDistanceError,
                     UnrealizableIndexError, UnresolvedDoubletError)
from .focal import (AperturePatch, FieldSample, GainEstimate, PatchSet,
                    analytic_focal_amplitude, field_scan, focusing_gain, huygens_field)
from .ingest import ScanRecord, load_scan, load_trace
from .lens import (LensLattice, LensSpec, UnitCell, b_from_fill, discretize_lens,
                   export_stl, fill_fraction_for_index, luneburg_index)
from .raytrace import Ray, Trajectory, focus_parallel_bundle, trace_ray
from .rydberg import (AtomicTransition, EitSpectrum, MeasurementConfig, SplittingFit,
                      at_splitting, enhanced_min_field, field_from_splitting,
                      fit_splitting, gain_from_spectra, min_detectable_field,
                      synth_eit_spectrum)

__version__ = "0.1.0"
