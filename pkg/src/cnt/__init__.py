"""Neuromorphic speckle tracking: simulation, aggregation, filtering, objective and tracking."""
from .aggregation import AggregationParams, SpeckleMap, aggregate, map_sequence
from .config import ExperimentConfig, load_config, parse_config
from .errors import (CNTError, ConfigurationError, ConstraintError, DegenerateInputError,
                     InputError, ParseError, RangeError)
from .events import EventRecord, EventStream
from .experiments import run_experiment
from .filtering import FilterSpec, lowpass, transfer_function
from .io import read_events, write_events
from .objective import (OMEConstraint, ObjectiveReport, ObjectiveWeights, SearchDomain,
                        composite_objective, optimize)
from .scene import (EventCameraModel, FrameCamera, SceneConfig, TrajectorySpec, generate_field,
                    instantaneous_intensity, simulate_events, simulate_frames)
from .tracker import TrackReport, estimate_step, track_event_only, track_frames, track_recursive

__version__ = "0.1.0"
