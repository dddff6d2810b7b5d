/** Wire formats exchanged with the annotation service. */

export interface EntryJson {
  id: number;
  type: string;
  begin?: number;
  end?: number;
  parent?: number;
  child?: number;
  members?: number[];
  attributes: Record<string, unknown>;
  embedding?: number[];
}

export interface PackJson {
  pack_id: string;
  text: string;
  next_id: number;
  entries: EntryJson[];
}

export interface AttributeSpecJson {
  name: string;
  type: string;
}

export interface TypeSpecJson {
  name: string;
  parent: string;
  attributes: AttributeSpecJson[];
}

export interface OntologyJson {
  types: TypeSpecJson[];
}

export interface CrossLinkJson {
  id: number;
  type: string;
  parent: [string, number];
  child: [string, number];
  attributes: Record<string, unknown>;
}

export interface MultiPackJson {
  name: string;
  next_id: number;
  packs: Record<string, PackJson>;
  cross_links: CrossLinkJson[];
}

export interface SuggestionJson {
  id: string;
  type: string;
  left: [string, number];
  right: [string, number];
  attributes: Record<string, unknown>;
  score: number;
  status: string;
  link_id: number | null;
}

/** New-entry payload for POST .../entries (the id comes from the server). */
export interface NewEntry {
  type: string;
  begin?: number;
  end?: number;
  parent?: number;
  child?: number;
  members?: number[];
  attributes?: Record<string, unknown>;
}

export const ROOTS = ["Generic", "Span", "Link", "Group"] as const;
export type RootName = (typeof ROOTS)[number];

/** Structural fields owned by each root; implicit in the ontology format. */
export const TEMPLATE_FIELDS: Record<RootName, string[]> = {
  Generic: [],
  Span: ["begin", "end"],
  Link: ["parent", "child"],
  Group: ["members"],
};
