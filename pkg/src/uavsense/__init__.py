"""uavsense: multi-UAV distributed ground-target sensing simulator."""

__version__ = "0.1.0"

from .geometry import (
    ArraySpec,
    Cell,
    Direction,
    GridSpec,
    PathGeometry,
    UavPose,
    assign_cells,
    build_grid,
    direction_to,
    path_geometry,
    place_uavs,
    steering_vector,
)
from .waveform import NoiseSpec, SymbolBlock, WaveformSpec, generate_frame, remove_data
from .channel import (
    QuadratureConfig,
    ReflectionMatrix,
    Scene,
    cell_clutter_matrix,
    interference_matrix,
    point_matrix,
    total_clutter_matrix,
)
from .beamforming import (
    BeamformerConfig,
    BeamformerPair,
    build_beamformer_table,
    rx_beamformer,
    tx_beamformer,
)
from .signal import (
    ClutterResponse,
    clutter_response,
    subtract_known_clutter,
    synthesize_received,
)
from .protocol import SampleStore, Schedule, Slot, build_schedule, run_campaign
from .estimation import (
    PhaseReference,
    RcsMap,
    benchmark_map,
    build_local_map,
    build_phase_references,
    central_mle_rcs,
    fuse_mimore,
    fuse_mupe,
    fuse_mure,
    local_mle_rcs,
    local_statistic,
    read_rcs_map,
    ridge_ratio,
    write_rcs_map,
)
from .localization import (
    LocalizerConfig,
    PositionEstimate,
    localize,
    normalize_map,
    off_grid,
    on_grid,
)
from .overhead import OverheadReport, compute_overhead, overhead_table
from .experiments import (
    ConfigError,
    ErrorStats,
    SimConfig,
    TrialResult,
    build_context,
    export_maps,
    run_batch,
    run_sweep,
    run_trial,
    write_sweep_csv,
)
from .rng import StreamFactory, substream
