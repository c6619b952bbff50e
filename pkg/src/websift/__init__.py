"""websift: hierarchical tracking/functional classification of web
requests with call-graph divergence analysis for mixed methods."""

from .attribution import EntityKey, Granularity
from .filters import Label, RuleSet, parse_filter_list
from .psl import PublicSuffixList, decompose_url
from .sift import DEFAULT_THRESHOLD, SiftResult, Verdict, ratio, sift, sweep
from .trace import RequestRecord, StackFrame, parse_trace

__version__ = "0.1.0"

__all__ = [
    "EntityKey",
    "Granularity",
    "Label",
    "RuleSet",
    "parse_filter_list",
    "PublicSuffixList",
    "decompose_url",
    "DEFAULT_THRESHOLD",
    "SiftResult",
    "Verdict",
    "ratio",
    "sift",
    "sweep",
    "RequestRecord",
    "StackFrame",
    "parse_trace",
    "__version__",
]
