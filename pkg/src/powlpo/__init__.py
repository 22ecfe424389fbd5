"""Discovery of POWL process models from partially ordered traces."""
from .discovery import discover
from .errors import PowlError
from .events import EventLog, Granularity, abstract_timestamps, parse_csv, parse_xes
from .intervals import build_interval_log
from .oracle import linearizations, random_powl, sample_pot_log, verify_perfect_fitness
from .petri import check_soundness, export_net_dot, export_pnml, to_workflow_net
from .pots import Pot, PotMultiset, build_pot, build_pot_multiset
from .powl import Loop, Order, Silent, Transition, Xor, canonical_key, from_json, to_json
from .semantics import accepts, enumerate_language

__version__ = "0.1.0"

__all__ = [
    "EventLog", "Granularity", "Loop", "Order", "Pot", "PotMultiset", "PowlError", "Silent",
    "Transition", "Xor", "abstract_timestamps", "accepts", "build_interval_log", "build_pot",
    "build_pot_multiset", "canonical_key", "check_soundness", "discover", "enumerate_language",
    "export_net_dot", "export_pnml", "from_json", "linearizations", "parse_csv", "parse_xes",
    "random_powl", "sample_pot_log", "to_json", "to_workflow_net", "verify_perfect_fitness",
]
