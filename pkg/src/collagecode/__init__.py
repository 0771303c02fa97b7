"""Coded redundancy for inference serving.

One collage model backs up n single-image workers: compose the batch into an
s x s collage, decode the collage model's boxes back to per-request
predictions, and fill straggling slots from the decoded answer instead of
waiting on the tail. Includes a deterministic simulator for comparing
no-redundancy, replication, and collage coding on latency percentiles,
accuracy, and resource overhead.
"""

from .geometry import (
    DetectionBox,
    GridSpec,
    Rect,
    box_to_rect,
    cell_containing,
    cell_rect,
    intersection_area,
)
from .codec import (
    CollageLayout,
    RasterImage,
    compose_collage,
    read_ppm,
    read_ppm_file,
    resize_bilinear,
    write_ppm,
    write_ppm_file,
)
from .decoder import (
    CellPrediction,
    DecodedCollage,
    assign_box_to_cell,
    boxes_to_json,
    decode_collage,
    parse_boxes_json,
)
from .protocol import (
    BatchState,
    CollageResult,
    Complete,
    DeadlineTick,
    FillPolicy,
    IssueReissue,
    ProtocolConfig,
    ReissueResult,
    SingleResult,
    Source,
    completion_oracle,
    new_batch_state,
    on_event,
    replay_event_log,
    run_batch,
)
from .rng import Prng, splitmix64_next
from .models import (
    AccuracyReport,
    MockModelParams,
    end_to_end_accuracy,
    mock_classify,
    mock_collage_boxes,
)
from .sim import (
    CollageScheme,
    LatencyModel,
    NoRedundancy,
    Replication,
    SchemeReport,
    Workload,
    percentile_nearest_rank,
    run_scheme,
    sample_latency,
)
from .simio import default_config_path, load_config, parse_report_csv, write_report_csv
from .bridge import (
    BridgeRequest,
    BridgeResponse,
    decode_request,
    decode_response,
    dispatch_live,
    encode_request,
    encode_response,
)
from .errors import ConfigError, PpmParseError, ProtocolError, WireProtocolError

__version__ = "0.1.0"
