import { OntologyIndex } from "./ontology.js";
import { PackModel } from "./packmodel.js";
import { RenderState, emptyRenderState, renderDocument } from "./render.js";
import { typeColor } from "./colors.js";
import { CrossLinkJson } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface TwoDocView {
  leftAlias: string;
  rightAlias: string;
  left: PackModel;
  right: PackModel;
  crossLinks: CrossLinkJson[];
}

export interface TwoDocState {
  hiddenTypes: Set<string>;
  /** entry ids to emphasize per pane (the suggestion under review). */
  emphasizeLeft: Set<number>;
  emphasizeRight: Set<number>;
}

export function emptyTwoDocState(): TwoDocState {
  return { hiddenTypes: new Set(), emphasizeLeft: new Set(), emphasizeRight: new Set() };
}

/** Abstract x for a span in pane coordinates (0..1000 per pane). */
function paneX(pack: PackModel, entryId: number): number | null {
  const entry = pack.get(entryId);
  if (!entry || entry.begin === undefined || entry.end === undefined) {
    return null;
  }
  const length = Math.max(1, pack.text.length);
  return ((entry.begin + entry.end) / 2 / length) * 1000;
}

/** Side-by-side documents with straight connectors for cross-pack links. */
export function renderTwoDoc(
  container: HTMLElement,
  view: TwoDocView,
  ontology: OntologyIndex,
  state: TwoDocState,
): void {
  container.textContent = "";
  container.classList.add("two-doc");

  const panes = document.createElement("div");
  panes.className = "panes";
  const leftPane = document.createElement("div");
  leftPane.className = "pane pane-left";
  leftPane.dataset.alias = view.leftAlias;
  const rightPane = document.createElement("div");
  rightPane.className = "pane pane-right";
  rightPane.dataset.alias = view.rightAlias;
  panes.appendChild(leftPane);
  panes.appendChild(rightPane);

  const leftState: RenderState = {
    ...emptyRenderState(),
    hiddenTypes: state.hiddenTypes,
    emphasized: state.emphasizeLeft,
  };
  const rightState: RenderState = {
    ...emptyRenderState(),
    hiddenTypes: state.hiddenTypes,
    emphasized: state.emphasizeRight,
  };
  renderDocument(leftPane, view.left, ontology, leftState);
  renderDocument(rightPane, view.right, ontology, rightState);

  // connectors between the panes for materialized cross-document links
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "cross-layer");
  svg.setAttribute("viewBox", "0 0 2100 80");
  for (const link of view.crossLinks) {
    const [fromAlias, fromId] = link.parent;
    const [toAlias, toId] = link.child;
    const fromPack = fromAlias === view.leftAlias ? view.left : view.right;
    const toPack = toAlias === view.leftAlias ? view.left : view.right;
    const rawFrom = paneX(fromPack, fromId);
    const rawTo = paneX(toPack, toId);
    if (rawFrom === null || rawTo === null) {
      continue;
    }
    const fromX = fromAlias === view.leftAlias ? rawFrom : rawFrom + 1100;
    const toX = toAlias === view.leftAlias ? rawTo : rawTo + 1100;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(fromX));
    line.setAttribute("y1", "40");
    line.setAttribute("x2", String(toX));
    line.setAttribute("y2", "40");
    line.setAttribute("class", "cross-connector");
    line.setAttribute("stroke", typeColor(link.type, ontology.has(link.type)));
    line.dataset.linkId = String(link.id);
    line.dataset.from = `${fromAlias}:${fromId}`;
    line.dataset.to = `${toAlias}:${toId}`;
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${link.type} ${fromAlias}#${fromId} → ${toAlias}#${toId}`;
    line.appendChild(title);
    svg.appendChild(line);
  }
  container.appendChild(svg);
  container.appendChild(panes);
}
