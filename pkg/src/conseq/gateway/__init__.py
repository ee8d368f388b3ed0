from .baseline import TitleClassifierModel, predict_title, train_title_baseline
from .core import (
    CompletionRequest,
    CompletionResponse,
    Gateway,
    Provider,
    TagCounters,
)
from .http import HttpProvider, RemoteTitleClassifier
from .mock import EMBED_DIM, MockProvider, MockRule, hashed_embedding, load_rules

__all__ = [
    "CompletionRequest",
    "CompletionResponse",
    "EMBED_DIM",
    "Gateway",
    "HttpProvider",
    "MockProvider",
    "MockRule",
    "Provider",
    "RemoteTitleClassifier",
    "TagCounters",
    "TitleClassifierModel",
    "hashed_embedding",
    "load_rules",
    "predict_title",
    "train_title_baseline",
]
