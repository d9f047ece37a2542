"""Python access to the forge C++ core.

Functions that produce structured data return plain dicts and lists.
"""

import json as _json

from . import _core
from ._core import (
    ForgeError,
    default_routing,
    difficulty_filter,
    exec_rate,
    extract_code_block,
    families,
    format_reward,
    group_advantages,
    instantiate,
    mix_seed,
    parse_score,
    prompt_ids,
    rank_candidates,
    render_prompt,
    splitmix64,
    template_ids,
)

__version__ = _core.__version__


def error_kind(err):
    """Return the ErrorKind name carried by a ForgeError."""
    return str(err).split(":", 1)[0]


def parse_verdict(text, family):
    return _json.loads(_core.parse_verdict(text, family))


def sample_parameters(template_id, seed):
    return _json.loads(_core.sample_parameters(template_id, seed))


def combine(r_fmt, r_exec, r_code, r_image):
    return _json.loads(_core.combine(r_fmt, r_exec, r_code, r_image))


def aggregate(records, failed_exec_scores_zero=True):
    return _json.loads(_core.aggregate(_json.dumps(records), failed_exec_scores_zero))


def ingest_annotations(annotations):
    return _json.loads(_core.ingest_annotations(_json.dumps(annotations)))


def rank(candidates, k):
    return rank_candidates(_json.dumps(candidates), k)


def load_config(path):
    return _json.loads(_core.load_config(str(path)))


def execute(script, timeout_s=120.0, trace=False):
    out = _core.execute(script, timeout_s, trace)
    result = _json.loads(out["result"])
    result["image"] = bytes(out["image"])
    return result
