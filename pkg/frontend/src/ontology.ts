import { AttributeSpecJson, ROOTS, RootName, TypeSpecJson } from "./types.js";

/** Client-side view of the type system served by `/projects/{p}/ontology`.
 * The four roots are implicit constants of the format. */
export class OntologyIndex {
  private readonly byName = new Map<string, TypeSpecJson>();

  constructor(types: TypeSpecJson[]) {
    for (const spec of types) {
      this.byName.set(spec.name, spec);
    }
  }

  has(name: string): boolean {
    return this.byName.has(name) || (ROOTS as readonly string[]).includes(name);
  }

  /** Root template for a type, or null when the type is unknown. */
  rootOf(name: string): RootName | null {
    let current = name;
    for (let hops = 0; hops < 1000; hops++) {
      if ((ROOTS as readonly string[]).includes(current)) {
        return current as RootName;
      }
      const spec = this.byName.get(current);
      if (!spec) {
        return null;
      }
      current = spec.parent;
    }
    return null;
  }

  /** Declared plus inherited attributes, outermost ancestor first. */
  attributesOf(name: string): AttributeSpecJson[] {
    const chain: TypeSpecJson[] = [];
    let current = this.byName.get(name);
    while (current) {
      chain.unshift(current);
      current = this.byName.get(current.parent);
    }
    const seen = new Set<string>();
    const out: AttributeSpecJson[] = [];
    for (const spec of chain) {
      for (const attr of spec.attributes) {
        if (!seen.has(attr.name)) {
          seen.add(attr.name);
          out.push(attr);
        }
      }
    }
    return out;
  }

  /** Concrete (non-root) type names with the given root, sorted. */
  typesWithRoot(root: RootName): string[] {
    const out: string[] = [];
    for (const name of this.byName.keys()) {
      if (this.rootOf(name) === root) {
        out.push(name);
      }
    }
    return out.sort();
  }

  allTypes(): string[] {
    return [...this.byName.keys()].sort();
  }
}
