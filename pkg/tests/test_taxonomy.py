"""Taxonomy validation, canonical ordering, and label-set legality."""

import json

import pytest

from garmentcast.taxonomy import (
    LabelSet,
    Taxonomy,
    TaxonomyError,
    label_set_from_names,
    load_taxonomy,
    save_taxonomy,
    validate_taxonomy,
)


def small_taxonomy() -> Taxonomy:
    return Taxonomy.build(
        ["upper-body", "lower-body", "full-body", "footwear"],
        [("shirt", "upper-body"), ("jacket", "upper-body"),
         ("jeans", "lower-body"), ("skirt", "lower-body"),
         ("dress", "full-body"), ("jumpsuit", "full-body"),
         ("sneaker", "footwear"), ("boot", "footwear")],
        [("striped", ["upper-body", "lower-body", "full-body"]),
         ("checked", ["upper-body", "full-body"]),
         ("pinafore", ["full-body"]),
         ("collarless", ["upper-body"]),
         ("laced", ["footwear"]),
         ("denim", ["lower-body", "upper-body"])],
    )


class TestValidation:
    def test_consistent_taxonomy_is_ok(self):
        assert validate_taxonomy(small_taxonomy()) == []

    def test_unknown_parent_names_category(self):
        bad = Taxonomy.build(["upper-body"], [("shirt", "upper-body"), ("boot", "shoes")],
                             [("striped", ["upper-body"])])
        violations = validate_taxonomy(bad)
        assert any("categories/boot" in v and "shoes" in v for v in violations)

    def test_attribute_with_no_legal_types_flagged(self):
        bad = Taxonomy.build(["upper-body"], [("shirt", "upper-body")],
                             [("floating", [])])
        violations = validate_taxonomy(bad)
        assert any("attributes/floating" in v and "zero" in v for v in violations)

    def test_type_without_categories_flagged(self):
        bad = Taxonomy.build(["upper-body", "footwear"], [("shirt", "upper-body")],
                             [("striped", ["upper-body"])])
        assert any("footwear" in v for v in validate_taxonomy(bad))

    def test_duplicate_names_flagged(self):
        bad = Taxonomy.build(["upper-body"], [("shirt", "upper-body"), ("shirt", "upper-body")],
                             [("striped", ["upper-body"])])
        assert any("duplicate" in v for v in validate_taxonomy(bad))


class TestCanonicalForm:
    def test_indices_sorted_by_name(self):
        tax = small_taxonomy()
        assert list(tax.garment_types) == sorted(tax.garment_types)
        assert [c.name for c in tax.categories] == sorted(c.name for c in tax.categories)
        assert [a.name for a in tax.attributes] == sorted(a.name for a in tax.attributes)

    def test_json_round_trip_preserves_hash(self, tmp_path):
        tax = small_taxonomy()
        path = tmp_path / "taxonomy.json"
        save_taxonomy(tax, path)
        loaded = load_taxonomy(path)
        assert loaded == tax
        assert loaded.content_hash() == tax.content_hash()

    def test_input_order_does_not_matter(self):
        a = small_taxonomy()
        b = Taxonomy.build(
            ["footwear", "full-body", "lower-body", "upper-body"],
            [("boot", "footwear"), ("dress", "full-body"), ("jacket", "upper-body"),
             ("jeans", "lower-body"), ("jumpsuit", "full-body"), ("shirt", "upper-body"),
             ("skirt", "lower-body"), ("sneaker", "footwear")],
            [("checked", ["full-body", "upper-body"]),
             ("collarless", ["upper-body"]),
             ("denim", ["upper-body", "lower-body"]),
             ("laced", ["footwear"]),
             ("pinafore", ["full-body"]),
             ("striped", ["full-body", "lower-body", "upper-body"])],
        )
        assert a == b and a.content_hash() == b.content_hash()

    def test_load_invalid_file_raises(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text(json.dumps({
            "garment_types": ["upper-body"],
            "categories": [{"name": "boot", "parent": "shoes"}],
            "attributes": [],
        }))
        with pytest.raises(TaxonomyError, match="boot"):
            load_taxonomy(path)


class TestLabelSets:
    def test_legal_label_set(self):
        tax = small_taxonomy()
        ls = label_set_from_names(tax, "dress", ["pinafore", "checked"])
        assert ls.violations(tax) == []
        assert ls.garment_type == tax.type_index("full-body")

    def test_attribute_illegal_for_type(self):
        tax = small_taxonomy()
        ls = label_set_from_names(tax, "shirt", ["collarless"])
        bad = LabelSet(ls.garment_type, ls.category,
                       ls.attributes | {tax.attribute_index("pinafore")})
        violations = bad.violations(tax)
        assert any("pinafore" in v for v in violations)
        with pytest.raises(TaxonomyError, match="pinafore"):
            bad.require_legal(tax)

    def test_category_type_mismatch(self):
        tax = small_taxonomy()
        ls = LabelSet(garment_type=tax.type_index("footwear"),
                      category=tax.category_index("dress"))
        assert any("dress" in v for v in ls.violations(tax))

    def test_unknown_names_raise(self):
        tax = small_taxonomy()
        with pytest.raises(TaxonomyError, match="gown"):
            label_set_from_names(tax, "gown", [])
        with pytest.raises(TaxonomyError, match="sparkly"):
            label_set_from_names(tax, "dress", ["sparkly"])
