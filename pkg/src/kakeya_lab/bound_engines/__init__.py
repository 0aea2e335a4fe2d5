from .certificates import ReplayReport, diff_json, make_certificate, replay_certificate, run_engine
from .cordoba import CordobaCertificate, best_prefix, cordoba_lower_bound, cordoba_prime
from .hairbrush import HairbrushCertificate, HairbrushLeaf, hairbrush_bound
from .planebrush import PlanebrushCertificate, PlanebrushIteration, planebrush_bound
from .ratio import TheoremRatio, theorem_ratio

__all__ = [
    "CordobaCertificate",
    "HairbrushCertificate",
    "HairbrushLeaf",
    "PlanebrushCertificate",
    "PlanebrushIteration",
    "ReplayReport",
    "TheoremRatio",
    "best_prefix",
    "cordoba_lower_bound",
    "cordoba_prime",
    "diff_json",
    "hairbrush_bound",
    "make_certificate",
    "planebrush_bound",
    "replay_certificate",
    "run_engine",
    "theorem_ratio",
]
