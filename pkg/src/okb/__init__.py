"""Object-native knowledge base: typed entities, an entity query language,
ripple-down rule trees, ontology import with forward-chaining
materialization, and derived relational persistence."""

from .kb import (
    AttributeSpec,
    ClassDef,
    Individual,
    KnowledgeBase,
    PropertyDef,
    RoleBinding,
    ScalarKind,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeSpec",
    "ClassDef",
    "Individual",
    "KnowledgeBase",
    "PropertyDef",
    "RoleBinding",
    "ScalarKind",
    "__version__",
]
