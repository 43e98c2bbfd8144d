"""JSON schemas for the run configs of every CLI subcommand.

Unknown keys are rejected everywhere (additionalProperties: false), so a
typo in a config fails fast instead of silently using a default.
"""

_CFG = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_antennas": {"type": "integer", "minimum": 1},
        "carrier_hz": {"type": "number", "exclusiveMinimum": 0},
        "spacing_m": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "bs_height_m": {"type": "number", "minimum": 0},
        "tilt_rad": {"type": "number"},
    },
}

_RANGE_PAIR = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

_RANGES = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"x_m": _RANGE_PAIR, "h_m": _RANGE_PAIR},
}

_CODEBOOK = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_angles": {"type": "integer", "minimum": 1},
        "n_dist_slots": {"type": "integer", "minimum": 1},
        "r_min": {"type": "number", "exclusiveMinimum": 0},
    },
}

_SEED = {"type": "integer", "minimum": 0}
_OUT = {"type": "string"}

GEN = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "cfg": _CFG,
        "k_users": {"type": "integer", "minimum": 1},
        "splits": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "train": {"type": "integer", "minimum": 1},
                "val": {"type": "integer", "minimum": 1},
                "test": {"type": "integer", "minimum": 1},
            },
        },
        "ranges": _RANGES,
        "snr_db": {"type": "number"},
        "with_oracle": {"type": "boolean"},
        "oracle_budget": {"type": "integer", "minimum": 1},
        "normalized_gain": {"type": "boolean"},
        "seed": _SEED,
        "out": _OUT,
    },
}

SWEEP_SNR = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "cfg": _CFG,
        "k_users": {"type": "integer", "minimum": 1},
        "n_records": {"type": "integer", "minimum": 1},
        "snr_db_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "ranges": _RANGES,
        "codebook": _CODEBOOK,
        "oracle_budget": {"type": "integer", "minimum": 1},
        "schemes": {
            "type": "array",
            "items": {"enum": ["mrt", "zf", "sdma", "ldma", "oracle"]},
            "minItems": 1,
        },
        "normalized_gain": {"type": "boolean"},
        "seed": _SEED,
        "out": _OUT,
    },
}

LDMA_VS_SDMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "cfg": _CFG,
        "n_seeds": {"type": "integer", "minimum": 1},
        "snr_db": {"type": "number"},
        "r_near_m": {"type": "number", "exclusiveMinimum": 0},
        "gaps_m": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "angle_cos_range": _RANGE_PAIR,
        "codebook": _CODEBOOK,
        "normalized_gain": {"type": "boolean"},
        "seed": _SEED,
        "out": _OUT,
    },
}

CLASSIFY = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "cfg": _CFG,
        "n_val": {"type": "integer", "minimum": 2},
        "n_test": {"type": "integer", "minimum": 2},
        "near_r_factors": _RANGE_PAIR,
        "far_r_factors": _RANGE_PAIR,
        "angle_cos_range": _RANGE_PAIR,
        "csi_snr_db_grid": {"type": "array", "items": {"type": "number"}},
        "noiseless_row": {"type": "boolean"},
        "angle_grid_size": {"type": "integer", "minimum": 2},
        "seed": _SEED,
        "out": _OUT,
    },
}

_AXIS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start", "stop", "num"],
    "properties": {
        "start": {"type": "number"},
        "stop": {"type": "number"},
        "num": {"type": "integer", "minimum": 1},
        "spacing": {"enum": ["linear", "inverse"]},
    },
}

GAINMAP = {
    "type": "object",
    "additionalProperties": False,
    "required": ["beam"],
    "properties": {
        "cfg": _CFG,
        "beam": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "angle_rad"],
            "properties": {
                "kind": {"enum": ["focus", "steer"]},
                "angle_rad": {"type": "number"},
                "range_m": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "angles_rad": _AXIS,
        "ranges_m": _AXIS,
        "normalized_gain": {"type": "boolean"},
        "seed": _SEED,
        "out": _OUT,
    },
}

SCORE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dataset", "predictions"],
    "properties": {
        "dataset": {"type": "string"},
        "predictions": {"type": "string"},
        "seed": _SEED,
        "out": _OUT,
    },
}

BY_COMMAND = {
    "gen": GEN,
    "sweep-snr": SWEEP_SNR,
    "ldma-vs-sdma": LDMA_VS_SDMA,
    "classify": CLASSIFY,
    "gainmap": GAINMAP,
    "score": SCORE,
}
