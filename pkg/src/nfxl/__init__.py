"""Near-field XL-MIMO downlink toolkit for low-altitude users."""

from .geometry import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    ChannelMatrix,
    ChannelVec,
    FieldLabel,
    UserPos,
    antenna_positions,
    channel_matrix,
    far_channel,
    label_field,
    near_channel,
    rayleigh_distance,
    sample_users,
    user_at,
)
from .beams import (
    Beam,
    Codebook,
    angular_codebook,
    array_gain,
    focus_vector,
    gain_map,
    nearest_codeword,
    polar_codebook,
    steer_vector,
    write_gain_map_csv,
)
from .precoding import (
    OracleResult,
    PrecodeProblem,
    PrecodeSolution,
    codebook_precoder,
    location_precoder,
    mrt,
    oracle_lambda,
    sinr,
    structure_precoder,
    structure_se,
    sum_se,
    waterfill,
    zf,
)
from .fieldsplit import (
    ClassifierConfig,
    ConfusionReport,
    add_csi_noise,
    calibrate_threshold,
    classify,
    confusion,
    field_stat,
    field_stats,
)
from .datastore import (
    Dataset,
    DatasetRecord,
    GenSpec,
    PredictionRecord,
    PredictionSet,
    ScoreReport,
    generate,
    read,
    read_predictions,
    score,
    write,
    write_predictions,
)

__version__ = "0.1.0"
