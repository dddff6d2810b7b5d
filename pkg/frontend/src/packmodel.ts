import { OntologyIndex } from "./ontology.js";
import { EntryJson, PackJson } from "./types.js";

/** Client pack state: the last JSON from the server plus the revision it
 * came with. Mutation helpers mirror accepted server responses; ids are
 * always the server's (this model never invents one). */
export class PackModel {
  readonly packId: string;
  readonly text: string;
  revision: number;
  readonly entries = new Map<number, EntryJson>();

  private constructor(packId: string, text: string, revision: number) {
    this.packId = packId;
    this.text = text;
    this.revision = revision;
  }

  static fromJson(json: PackJson, revision: number): PackModel {
    const model = new PackModel(json.pack_id, json.text, revision);
    for (const entry of json.entries) {
      model.entries.set(entry.id, { ...entry, attributes: { ...entry.attributes } });
    }
    return model;
  }

  get(id: number): EntryJson | undefined {
    return this.entries.get(id);
  }

  /** Entries in ascending id order (the canonical order). */
  sortedEntries(): EntryJson[] {
    return [...this.entries.values()].sort((a, b) => a.id - b.id);
  }

  /** Span entries in index order: begin asc, end desc, id asc. */
  spanEntries(ontology: OntologyIndex): EntryJson[] {
    return this.sortedEntries()
      .filter((e) => ontology.rootOf(e.type) === "Span" || (e.begin !== undefined && e.end !== undefined))
      .filter((e) => e.begin !== undefined && e.end !== undefined)
      .sort((a, b) => a.begin! - b.begin! || b.end! - a.end! || a.id - b.id);
  }

  linkEntries(ontology: OntologyIndex): EntryJson[] {
    return this.sortedEntries().filter((e) => e.parent !== undefined && e.child !== undefined);
  }

  groupEntries(): EntryJson[] {
    return this.sortedEntries().filter((e) => e.members !== undefined);
  }

  /** Record a server-confirmed creation. */
  applyCreate(id: number, entry: Omit<EntryJson, "id">, revision: number): void {
    this.entries.set(id, { ...entry, id, attributes: { ...(entry.attributes ?? {}) } });
    this.revision = revision;
  }

  /** Record a server-confirmed attribute/span patch (null removes a key). */
  applyPatch(
    id: number,
    attributes: Record<string, unknown> | null,
    span: [number, number] | null,
    revision: number,
  ): void {
    const entry = this.entries.get(id);
    if (!entry) {
      return;
    }
    for (const [key, value] of Object.entries(attributes ?? {})) {
      if (value === null) {
        delete entry.attributes[key];
      } else {
        entry.attributes[key] = value;
      }
    }
    if (span) {
      entry.begin = span[0];
      entry.end = span[1];
    }
    this.revision = revision;
  }

  /** A normalized fingerprint of the render-relevant state; two models with
   * the same fingerprint render identically. */
  fingerprint(): string {
    const entries = this.sortedEntries().map((e) => ({
      id: e.id,
      type: e.type,
      begin: e.begin ?? null,
      end: e.end ?? null,
      parent: e.parent ?? null,
      child: e.child ?? null,
      members: e.members ?? null,
      attributes: Object.fromEntries(Object.entries(e.attributes).sort(([a], [b]) => (a < b ? -1 : 1))),
    }));
    return JSON.stringify({ pack_id: this.packId, text: this.text, entries });
  }

  renderEquals(other: PackModel): boolean {
    return this.fingerprint() === other.fingerprint();
  }
}
