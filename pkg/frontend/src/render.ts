import { arcPath, layoutArcs } from "./arcs.js";
import { typeBackground, typeColor } from "./colors.js";
import { OntologyIndex } from "./ontology.js";
import { PackModel } from "./packmodel.js";
import { SpanLike, caretOffsets, computeSegments, zeroWidthAt } from "./segments.js";
import { EntryJson } from "./types.js";

export interface RenderState {
  /** Type names whose layer is switched off. Pure view state. */
  hiddenTypes: Set<string>;
  selected: number | null;
  /** Extra entry ids to emphasize (e.g. the suggestion under review). */
  emphasized: Set<number>;
}

export function emptyRenderState(): RenderState {
  return { hiddenTypes: new Set(), selected: null, emphasized: new Set() };
}

const SVG_NS = "http://www.w3.org/2000/svg";

function spanLikes(pack: PackModel, ontology: OntologyIndex, state: RenderState): SpanLike[] {
  return pack
    .sortedEntries()
    .filter((e) => e.begin !== undefined && e.end !== undefined)
    .filter((e) => !state.hiddenTypes.has(e.type))
    .map((e) => ({ id: e.id, begin: e.begin!, end: e.end!, type: e.type }));
}

function visibleLinks(pack: PackModel, ontology: OntologyIndex, state: RenderState): EntryJson[] {
  return pack
    .linkEntries(ontology)
    .filter((e) => !state.hiddenTypes.has(e.type));
}

/** Abstract x anchor for a span entry: segment elements carry no geometry
 * under test DOM implementations, so anchors fall back to character
 * positions scaled into a 1000-wide coordinate space. */
function anchorX(container: HTMLElement, pack: PackModel, entryId: number): number | null {
  const entry = pack.get(entryId);
  if (!entry || entry.begin === undefined || entry.end === undefined) {
    return null;
  }
  const el = container.querySelector<HTMLElement>(`[data-span-anchor="${entryId}"]`);
  if (el) {
    const rect = el.getBoundingClientRect();
    const host = container.getBoundingClientRect();
    if (rect.width > 0 || rect.x !== 0) {
      return rect.x - host.x + rect.width / 2;
    }
  }
  const length = Math.max(1, pack.text.length);
  return ((entry.begin + entry.end) / 2 / length) * 1000;
}

/** Render one document: highlighted text, link arcs, group legend.
 *
 * Spans are colored by a stable hash of their type name (gray when the
 * ontology does not know the type); overlap renders as nesting; zero-width
 * spans render as caret markers at their offset. */
export function renderDocument(
  container: HTMLElement,
  pack: PackModel,
  ontology: OntologyIndex,
  state: RenderState,
): void {
  container.textContent = "";
  container.classList.add("doc");

  const spans = spanLikes(pack, ontology, state);
  const textHost = document.createElement("div");
  textHost.className = "doc-text";
  container.appendChild(textHost);

  const carets = new Set(caretOffsets(spans));
  const segments = computeSegments(pack.text.length, spans);

  const emitCarets = (offset: number, into: HTMLElement) => {
    if (!carets.has(offset)) {
      return;
    }
    for (const zw of zeroWidthAt(spans, offset)) {
      const caret = document.createElement("span");
      caret.className = "caret-marker";
      caret.dataset.entryId = String(zw.id);
      caret.dataset.spanAnchor = String(zw.id);
      caret.style.borderColor = typeColor(zw.type, ontology.has(zw.type));
      caret.title = `${zw.type}@${offset}`;
      if (state.selected === zw.id) {
        caret.classList.add("selected");
      }
      if (state.emphasized.has(zw.id)) {
        caret.classList.add("emphasized");
      }
      into.appendChild(caret);
    }
  };

  const anchored = new Set<number>();
  for (const segment of segments) {
    emitCarets(segment.begin, textHost);
    let host: HTMLElement = textHost;
    for (const span of segment.covering) {
      const wrap = document.createElement("span");
      wrap.className = "hl";
      wrap.dataset.entryId = String(span.id);
      wrap.dataset.entryType = span.type;
      if (!anchored.has(span.id)) {
        wrap.dataset.spanAnchor = String(span.id);
        anchored.add(span.id);
      }
      wrap.style.backgroundColor = typeBackground(span.type, ontology.has(span.type));
      if (state.selected === span.id) {
        wrap.classList.add("selected");
      }
      if (state.emphasized.has(span.id)) {
        wrap.classList.add("emphasized");
      }
      host.appendChild(wrap);
      host = wrap;
    }
    const textNode = document.createElement("span");
    textNode.className = "seg";
    textNode.dataset.begin = String(segment.begin);
    textNode.dataset.end = String(segment.end);
    textNode.textContent = pack.text.slice(segment.begin, segment.end);
    host.appendChild(textNode);
  }
  emitCarets(pack.text.length, textHost);

  // link arcs above the text
  const links = visibleLinks(pack, ontology, state);
  const arcInputs = [];
  for (const link of links) {
    const fromX = anchorX(container, pack, link.parent!);
    const toX = anchorX(container, pack, link.child!);
    if (fromX === null || toX === null) {
      continue; // endpoints hidden or not spans: nothing to draw
    }
    arcInputs.push({ linkId: link.id, type: link.type, fromX, toX });
  }
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "arc-layer");
  const baseY = 90;
  svg.setAttribute("viewBox", `0 0 1000 ${baseY + 10}`);
  for (const spec of layoutArcs(arcInputs)) {
    const link = pack.get(spec.linkId)!;
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", arcPath(spec, baseY));
    path.setAttribute("class", "arc");
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", typeColor(spec.type, ontology.has(spec.type)));
    path.dataset.linkId = String(spec.linkId);
    path.dataset.level = String(spec.level);
    if (state.selected === spec.linkId) {
      path.classList.add("selected");
    }
    if (state.emphasized.has(spec.linkId)) {
      path.classList.add("emphasized");
    }
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${link.type} ${link.parent} -> ${link.child}`;
    path.appendChild(title);
    svg.appendChild(path);
  }
  container.insertBefore(svg, textHost);

  // groups render as a legend listing member highlights
  const groups = pack.groupEntries().filter((g) => !state.hiddenTypes.has(g.type));
  if (groups.length > 0) {
    const legend = document.createElement("div");
    legend.className = "group-legend";
    for (const group of groups) {
      const item = document.createElement("div");
      item.className = "group-item";
      item.dataset.entryId = String(group.id);
      if (state.selected === group.id) {
        item.classList.add("selected");
      }
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.backgroundColor = typeColor(group.type, ontology.has(group.type));
      item.appendChild(swatch);
      const label = document.createElement("span");
      const members = (group.members ?? [])
        .map((m) => {
          const e = pack.get(m);
          return e && e.begin !== undefined
            ? JSON.stringify(pack.text.slice(e.begin, e.end))
            : `#${m}`;
        })
        .join(", ");
      label.textContent = `${group.type} #${group.id}: [${members}]`;
      item.appendChild(label);
      legend.appendChild(item);
    }
    container.appendChild(legend);
  }
}

/** Character offsets of a DOM selection inside a rendered document, using
 * the per-segment offsets; null when the selection leaves the text. */
export function selectionOffsets(container: HTMLElement, selection: Selection | null): [number, number] | null {
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) {
    return null;
  }
  const range = selection.getRangeAt(0);

  const offsetOf = (node: Node, offset: number): number | null => {
    const seg = (node instanceof Element ? node : node.parentElement)?.closest<HTMLElement>(".seg");
    if (!seg || !container.contains(seg)) {
      return null;
    }
    return Number(seg.dataset.begin) + offset;
  };

  const start = offsetOf(range.startContainer, range.startOffset);
  const end = offsetOf(range.endContainer, range.endOffset);
  if (start === null || end === null || start === end) {
    return null;
  }
  return start <= end ? [start, end] : [end, start];
}
