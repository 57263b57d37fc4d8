"""Human-in-the-loop social sensing platform.

Typed context entities with change subscriptions, authenticated device
ingestion, an append-only history store, on-device sensing transforms,
a questionnaire engine, tailored feedback, a municipal risk feed, a
deterministic cohort simulator and the offline analysis pipeline.
"""

from .broker import AttributeValue, ContextBroker, ContextEntity, Notification, Subscription
from .engagement import EngagementEngine, PendingPrompt, QuestionnaireKind
from .errors import PlatformError
from .feedback import FeedbackGranter, FeedbackGroup, assign_group
from .gateway import DeviceRegistration, IngestGateway, Measurement
from .history import HistoryStore, SeriesKey, SeriesPoint
from .platform import Platform, build_platform
from .risk import MunicipalRiskLevel, RiskTable, matrix_zone

__version__ = "0.1.0"

__all__ = [
    "AttributeValue",
    "ContextBroker",
    "ContextEntity",
    "DeviceRegistration",
    "EngagementEngine",
    "FeedbackGranter",
    "FeedbackGroup",
    "HistoryStore",
    "IngestGateway",
    "Measurement",
    "MunicipalRiskLevel",
    "Notification",
    "PendingPrompt",
    "Platform",
    "PlatformError",
    "QuestionnaireKind",
    "RiskTable",
    "SeriesKey",
    "SeriesPoint",
    "Subscription",
    "assign_group",
    "build_platform",
    "matrix_zone",
    "__version__",
]
