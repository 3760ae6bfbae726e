from medeval.extractors.baseline import extract_baseline, load_lexicon, load_rules
from medeval.extractors.normalize import FieldMap, default_field_map, normalize
from medeval.extractors.remote import RemotePolicy, ResponseCache, extract_remote
from medeval.extractors.types import PredictedEntity, RawEntity

__all__ = [
    "FieldMap", "PredictedEntity", "RawEntity", "RemotePolicy", "ResponseCache",
    "default_field_map", "extract_baseline", "extract_remote", "load_lexicon",
    "load_rules", "normalize",
]
