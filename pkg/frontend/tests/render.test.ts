// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from "vitest";

import { UNKNOWN_TYPE_COLOR } from "../src/colors.js";
import { OntologyIndex } from "../src/ontology.js";
import { PackModel } from "../src/packmodel.js";
import { renderAttributePanel } from "../src/panel.js";
import { emptyRenderState, renderDocument, selectionOffsets } from "../src/render.js";
import { emptyTwoDocState, renderTwoDoc } from "../src/twodoc.js";
import { PackJson, TypeSpecJson } from "../src/types.js";

const TYPES: TypeSpecJson[] = [
  { name: "Token", parent: "Span", attributes: [] },
  { name: "Sentence", parent: "Span", attributes: [{ name: "sentiment", type: "Float" }] },
  { name: "EntityMention", parent: "Span", attributes: [{ name: "ner_type", type: "Str" }] },
  { name: "PredicateMention", parent: "Span", attributes: [] },
  { name: "Relation", parent: "Link", attributes: [{ name: "rel_type", type: "Str" }] },
  { name: "EventMention", parent: "Span", attributes: [] },
  { name: "CrossDocLink", parent: "Link", attributes: [{ name: "rel_type", type: "Str" }] },
];

const ONT = new OntologyIndex(TYPES);

// "brought aid to the coast" with a predicate, two mentions, and a role link
const PACK: PackJson = {
  pack_id: "doc",
  text: "brought aid to the coast",
  next_id: 6,
  entries: [
    { id: 0, type: "PredicateMention", begin: 0, end: 7, attributes: {} },
    { id: 1, type: "EntityMention", begin: 8, end: 11, attributes: { ner_type: "OBJ" } },
    { id: 2, type: "EntityMention", begin: 19, end: 24, attributes: { ner_type: "LOC" } },
    { id: 3, type: "Relation", parent: 0, child: 2, attributes: { rel_type: "destination" } },
    { id: 4, type: "Sentence", begin: 0, end: 24, attributes: {} },
    { id: 5, type: "Token", begin: 12, end: 12, attributes: {} },
  ],
};

function host(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("single-document rendering", () => {
  it("highlights spans, draws arcs, and marks zero-width spans", () => {
    const container = host();
    renderDocument(container, PackModel.fromJson(PACK, 0), ONT, emptyRenderState());

    expect(container.querySelector(".doc-text")!.textContent).toBe(PACK.text);
    const highlight = container.querySelectorAll('[data-entry-id="1"].hl');
    expect(highlight.length).toBeGreaterThan(0);
    const arcs = container.querySelectorAll("path.arc");
    expect(arcs.length).toBe(1);
    expect((arcs[0] as SVGPathElement).dataset.linkId).toBe("3");
    const carets = container.querySelectorAll(".caret-marker");
    expect(carets.length).toBe(1);
    expect((carets[0] as HTMLElement).dataset.entryId).toBe("5");
  });

  it("renders nesting for overlapping spans", () => {
    const container = host();
    renderDocument(container, PackModel.fromJson(PACK, 0), ONT, emptyRenderState());
    // the mention at (8,11) sits inside the sentence wrapper
    const inner = container.querySelector<HTMLElement>('[data-entry-id="1"].hl')!;
    const outer = inner.closest('[data-entry-id="4"]');
    expect(outer).not.toBeNull();
  });

  it("renders an empty pack as plain text", () => {
    const container = host();
    const empty = PackModel.fromJson(
      { pack_id: "e", text: "plain words", next_id: 0, entries: [] },
      0,
    );
    renderDocument(container, empty, ONT, emptyRenderState());
    expect(container.querySelector(".doc-text")!.textContent).toBe("plain words");
    expect(container.querySelectorAll(".hl").length).toBe(0);
    expect(container.querySelectorAll("path.arc").length).toBe(0);
  });

  it("grays out unknown types and shows raw attributes", () => {
    const container = host();
    const pack = PackModel.fromJson(
      {
        pack_id: "u",
        text: "mystery",
        next_id: 1,
        entries: [{ id: 0, type: "alien.Thing", begin: 0, end: 7, attributes: { z: 1 } }],
      },
      0,
    );
    renderDocument(container, pack, ONT, emptyRenderState());
    const el = container.querySelector<HTMLElement>('[data-entry-id="0"].hl')!;
    expect(el.style.backgroundColor).toContain("0.35");

    const panel = host();
    renderAttributePanel(panel, pack.get(0)!, ONT, () => {});
    expect(panel.querySelector(".raw-attrs")!.textContent).toContain('"z": 1');
  });

  it("hides toggled layers without touching the network", () => {
    const fetchSpy = vi.fn();
    vi.stubGlobal("fetch", fetchSpy);
    const container = host();
    const state = emptyRenderState();
    state.hiddenTypes.add("EntityMention");
    renderDocument(container, PackModel.fromJson(PACK, 0), ONT, state);
    expect(container.querySelectorAll('[data-entry-id="1"].hl').length).toBe(0);
    expect(container.querySelectorAll('[data-entry-id="4"]').length).toBeGreaterThan(0);
    expect(fetchSpy).not.toHaveBeenCalled();
    vi.unstubAllGlobals();
  });

  it("groups render as a legend of member highlights", () => {
    const container = host();
    const withGroup: PackJson = {
      ...PACK,
      next_id: 7,
      entries: [...PACK.entries, { id: 6, type: "Group", members: [1, 2], attributes: {} }],
    };
    renderDocument(container, PackModel.fromJson(withGroup, 0), ONT, emptyRenderState());
    const item = container.querySelector<HTMLElement>(".group-item")!;
    expect(item.dataset.entryId).toBe("6");
    expect(item.textContent).toContain('"aid"');
    expect(item.textContent).toContain('"coast"');
  });

  it("derives selection offsets from segment metadata", () => {
    const container = host();
    renderDocument(container, PackModel.fromJson(PACK, 0), ONT, emptyRenderState());
    const segs = [...container.querySelectorAll<HTMLElement>(".seg")];
    const first = segs.find((s) => s.dataset.begin === "0")!;
    const range = document.createRange();
    range.setStart(first.firstChild!, 2);
    range.setEnd(first.firstChild!, 5);
    const fakeSelection = {
      rangeCount: 1,
      isCollapsed: false,
      getRangeAt: () => range,
    } as unknown as Selection;
    expect(selectionOffsets(container, fakeSelection)).toEqual([2, 5]);
  });
});

describe("attribute panel editors", () => {
  it("offers kind-appropriate editors and reports edits", () => {
    const panel = host();
    const pack = PackModel.fromJson(PACK, 0);
    let edited: Record<string, unknown> | null = null;
    renderAttributePanel(panel, pack.get(1)!, ONT, (changes) => {
      edited = changes;
    });
    const input = panel.querySelector<HTMLInputElement>('[data-attr="ner_type"]')!;
    expect(input.type).toBe("text");
    input.value = "DEST";
    panel.querySelector("form")!.dispatchEvent(new Event("submit", { cancelable: true }));
    expect(edited).toEqual({ ner_type: "DEST" });
  });

  it("uses numeric editors for Float attributes", () => {
    const panel = host();
    const pack = PackModel.fromJson(PACK, 0);
    renderAttributePanel(panel, pack.get(4)!, ONT, () => {});
    const input = panel.querySelector<HTMLInputElement>('[data-attr="sentiment"]')!;
    expect(input.type).toBe("number");
  });
});

describe("two-document rendering", () => {
  it("draws cross-document connectors for cross links", () => {
    const container = host();
    const left = PackModel.fromJson(
      {
        pack_id: "l",
        text: "the launch happened",
        next_id: 1,
        entries: [{ id: 0, type: "EventMention", begin: 4, end: 10, attributes: {} }],
      },
      0,
    );
    const right = PackModel.fromJson(
      {
        pack_id: "r",
        text: "a launch occurred",
        next_id: 1,
        entries: [{ id: 0, type: "EventMention", begin: 2, end: 8, attributes: {} }],
      },
      0,
    );
    const state = emptyTwoDocState();
    state.emphasizeLeft.add(0);
    renderTwoDoc(
      container,
      {
        leftAlias: "left",
        rightAlias: "right",
        left,
        right,
        crossLinks: [
          {
            id: 0,
            type: "CrossDocLink",
            parent: ["left", 0],
            child: ["right", 0],
            attributes: { rel_type: "coref" },
          },
        ],
      },
      ONT,
      state,
    );
    const connector = container.querySelector<SVGLineElement>("line.cross-connector")!;
    expect(connector.dataset.from).toBe("left:0");
    expect(connector.dataset.to).toBe("right:0");
    expect(Number(connector.getAttribute("x2"))).toBeGreaterThan(1100);
    const emphasized = container.querySelector(".pane-left .hl.emphasized");
    expect(emphasized).not.toBeNull();
    expect(container.querySelectorAll(".pane").length).toBe(2);
  });
});
