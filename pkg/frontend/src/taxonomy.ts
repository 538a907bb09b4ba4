/** Lookup helpers over the served taxonomy; the legality source of truth. */

import type { TaxonomyPayload } from "./types.js";

export class TaxonomyIndex {
  readonly hash: string;
  private readonly parents = new Map<string, string>();
  private readonly legalByType = new Map<string, string[]>();
  private readonly categoryNames: string[];
  private readonly attributeNames: string[];

  constructor(payload: TaxonomyPayload) {
    this.hash = payload.hash;
    this.categoryNames = payload.taxonomy.categories.map((c) => c.name);
    this.attributeNames = payload.taxonomy.attributes.map((a) => a.name);
    for (const category of payload.taxonomy.categories) {
      this.parents.set(category.name, category.parent);
    }
    for (const type of payload.taxonomy.garment_types) {
      this.legalByType.set(type, []);
    }
    for (const attribute of payload.taxonomy.attributes) {
      for (const type of attribute.legal_types) {
        this.legalByType.get(type)?.push(attribute.name);
      }
    }
  }

  categories(): string[] {
    return [...this.categoryNames];
  }

  attributes(): string[] {
    return [...this.attributeNames];
  }

  hasCategory(category: string): boolean {
    return this.parents.has(category);
  }

  categoryParent(category: string): string {
    const parent = this.parents.get(category);
    if (parent === undefined) {
      throw new Error(`unknown category ${JSON.stringify(category)}`);
    }
    return parent;
  }

  /** Attribute names legal for the category's garment type, taxonomy order. */
  legalAttributes(category: string): string[] {
    return [...(this.legalByType.get(this.categoryParent(category)) ?? [])];
  }

  isLegal(category: string, attribute: string): boolean {
    if (!this.parents.has(category)) return false;
    return this.legalAttributes(category).includes(attribute);
  }
}
