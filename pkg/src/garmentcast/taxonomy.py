"""Three-level garment label hierarchy: type -> category -> attributes.

Indices are canonical: names are sorted within each level, so the same
taxonomy file always yields the same index assignment, and the hash of the
canonical JSON form binds trained models to the taxonomy they saw.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class TaxonomyError(ValueError):
    """Raised when a taxonomy (or label set against one) is invalid."""


@dataclass(frozen=True)
class Category:
    name: str
    garment_type: str


@dataclass(frozen=True)
class Attribute:
    name: str
    legal_types: frozenset[str]


@dataclass(frozen=True)
class Taxonomy:
    garment_types: tuple[str, ...]
    categories: tuple[Category, ...]
    attributes: tuple[Attribute, ...]

    @staticmethod
    def build(garment_types, categories, attributes) -> "Taxonomy":
        """Normalize into canonical (name-sorted) order without validating.

        Categories may be ``Category`` instances or ``(name, parent)`` pairs;
        attributes likewise ``Attribute`` or ``(name, legal_types)``.
        """
        cats = [c if isinstance(c, Category) else Category(*c) for c in categories]
        attrs = [a if isinstance(a, Attribute) else Attribute(a[0], frozenset(a[1]))
                 for a in attributes]
        return Taxonomy(
            garment_types=tuple(sorted(garment_types)),
            categories=tuple(sorted(cats, key=lambda c: c.name)),
            attributes=tuple(sorted(attrs, key=lambda a: a.name)),
        )

    # ---- index lookups -------------------------------------------------------

    def type_index(self, name: str) -> int:
        try:
            return self.garment_types.index(name)
        except ValueError:
            raise TaxonomyError(f"unknown garment type {name!r}") from None

    def category_index(self, name: str) -> int:
        for i, c in enumerate(self.categories):
            if c.name == name:
                return i
        raise TaxonomyError(f"unknown category {name!r}")

    def attribute_index(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise TaxonomyError(f"unknown attribute {name!r}")

    def category_parent(self, category: int) -> int:
        return self.type_index(self.categories[category].garment_type)

    def attribute_legal_for_type(self, attribute: int, garment_type: int) -> bool:
        return self.garment_types[garment_type] in self.attributes[attribute].legal_types

    def categories_of_type(self, garment_type: int) -> list[int]:
        name = self.garment_types[garment_type]
        return [i for i, c in enumerate(self.categories) if c.garment_type == name]

    def attributes_of_type(self, garment_type: int) -> list[int]:
        name = self.garment_types[garment_type]
        return [i for i, a in enumerate(self.attributes) if name in a.legal_types]

    # ---- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "garment_types": list(self.garment_types),
            "categories": [{"name": c.name, "parent": c.garment_type}
                           for c in self.categories],
            "attributes": [{"name": a.name, "legal_types": sorted(a.legal_types)}
                           for a in self.attributes],
        }

    @staticmethod
    def from_dict(raw: dict) -> "Taxonomy":
        return Taxonomy.build(
            raw["garment_types"],
            [(c["name"], c["parent"]) for c in raw["categories"]],
            [(a["name"], a["legal_types"]) for a in raw["attributes"]],
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def validate_taxonomy(taxonomy: Taxonomy) -> list[str]:
    """Return every invariant violation, each naming the offending entry."""
    violations: list[str] = []
    types = taxonomy.garment_types
    if len(set(types)) != len(types):
        violations.append("garment_types: duplicate names")
    if not types:
        violations.append("garment_types: empty")

    seen_cats: set[str] = set()
    children: dict[str, int] = {t: 0 for t in types}
    for c in taxonomy.categories:
        if c.name in seen_cats:
            violations.append(f"categories/{c.name}: duplicate name")
        seen_cats.add(c.name)
        if c.garment_type not in types:
            violations.append(f"categories/{c.name}: unknown parent {c.garment_type!r}")
        else:
            children[c.garment_type] += 1
    for t, n in children.items():
        if n == 0:
            violations.append(f"garment_types/{t}: no categories")

    seen_attrs: set[str] = set()
    for a in taxonomy.attributes:
        if a.name in seen_attrs:
            violations.append(f"attributes/{a.name}: duplicate name")
        seen_attrs.add(a.name)
        unknown = a.legal_types - set(types)
        if unknown:
            violations.append(f"attributes/{a.name}: unknown legal types {sorted(unknown)}")
        if not (a.legal_types & set(types)):
            violations.append(f"attributes/{a.name}: legal for zero garment types")
    return violations


def load_taxonomy(path: str | Path) -> Taxonomy:
    """Load and validate a taxonomy JSON file; raises listing all violations."""
    taxonomy = Taxonomy.from_dict(json.loads(Path(path).read_text()))
    violations = validate_taxonomy(taxonomy)
    if violations:
        raise TaxonomyError("invalid taxonomy: " + "; ".join(violations))
    return taxonomy


def save_taxonomy(taxonomy: Taxonomy, path: str | Path) -> None:
    Path(path).write_text(json.dumps(taxonomy.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class LabelSet:
    """One garment's labels: its type, category, and attribute indices."""

    garment_type: int
    category: int
    attributes: frozenset[int] = field(default_factory=frozenset)

    def violations(self, taxonomy: Taxonomy) -> list[str]:
        out: list[str] = []
        n_types = len(taxonomy.garment_types)
        n_cats = len(taxonomy.categories)
        n_attrs = len(taxonomy.attributes)
        if not 0 <= self.garment_type < n_types:
            out.append(f"garment_type index {self.garment_type} out of range")
            return out
        if not 0 <= self.category < n_cats:
            out.append(f"category index {self.category} out of range")
            return out
        if taxonomy.category_parent(self.category) != self.garment_type:
            out.append(
                f"category {taxonomy.categories[self.category].name!r} does not belong to "
                f"garment type {taxonomy.garment_types[self.garment_type]!r}")
        for a in sorted(self.attributes):
            if not 0 <= a < n_attrs:
                out.append(f"attribute index {a} out of range")
            elif not taxonomy.attribute_legal_for_type(a, self.garment_type):
                out.append(
                    f"attribute {taxonomy.attributes[a].name!r} is illegal for garment type "
                    f"{taxonomy.garment_types[self.garment_type]!r}")
        return out

    def require_legal(self, taxonomy: Taxonomy) -> "LabelSet":
        violations = self.violations(taxonomy)
        if violations:
            raise TaxonomyError("illegal label set: " + "; ".join(violations))
        return self


def label_set_from_names(taxonomy: Taxonomy, category: str,
                         attributes: list[str]) -> LabelSet:
    """Build a LabelSet from names; the garment type is the category's parent."""
    cat_idx = taxonomy.category_index(category)
    type_idx = taxonomy.category_parent(cat_idx)
    attr_idx = frozenset(taxonomy.attribute_index(a) for a in attributes)
    return LabelSet(garment_type=type_idx, category=cat_idx, attributes=attr_idx)
