"""Multiscale nestedness analysis of location x technology innovation maps."""

__version__ = "0.1.0"

from .binarize import RcaConfig, binarize, prune_empty, rca_matrix, threshold_binarize
from .grid import (Frontier, GridConfig, ScaleGrid, compute_grid, extract_frontier,
                   grid_to_csv)
from .ingest import (IngestConfig, InvalidRecordPolicy, aggregate_map, build_finest_map,
                     parse_patents)
from .model import (BinaryMap, CodePath, Dimension, PatentRecord, ScalePair, WeightedMap,
                    truncate_code, validate_hierarchy)
from .rank import FitnessResult, fitness_complexity, pack_matrix
from .recap import NullEnsemble, ZScore, null_ensemble, recap_sample, z_score
from .synth import Regime, SynthSpec, gen_nested, gen_records
from .temperature import (Isocline, TemperatureReport, measure_temperature, solve_isocline,
                          unexpectedness)
