import { ApiClient, ApiError } from "./api.js";
import { OntologyIndex } from "./ontology.js";
import { PackModel } from "./packmodel.js";
import { renderAttributePanel } from "./panel.js";
import { RenderState, emptyRenderState, renderDocument, selectionOffsets } from "./render.js";
import { TwoDocState, emptyTwoDocState, renderTwoDoc } from "./twodoc.js";
import { NewEntry, SuggestionJson } from "./types.js";

export type Notice = (kind: "info" | "error", message: string) => void;

/** Single-document annotation controller.
 *
 * Mutations are optimistic against the local model: the server response's
 * id/revision is applied locally without a refetch, and a 409 triggers a
 * refetch-and-replay of the gesture. All entry ids come from the server.
 */
export class SingleDocController {
  ontology: OntologyIndex;
  pack: PackModel | null = null;
  readonly view: RenderState = emptyRenderState();
  linkDraftParent: number | null = null;
  groupDraft = new Set<number>();
  onChanged: () => void = () => {};

  constructor(
    readonly api: ApiClient,
    readonly project: string,
    ontology: OntologyIndex,
    readonly notify: Notice = () => {},
    readonly verifyReconciliation = false,
  ) {
    this.ontology = ontology;
  }

  async open(packId: string): Promise<void> {
    const { pack, revision } = await this.api.getPack(this.project, packId);
    this.pack = PackModel.fromJson(pack, revision);
    this.view.selected = null;
    this.linkDraftParent = null;
    this.groupDraft.clear();
    this.onChanged();
  }

  async refetch(): Promise<void> {
    if (this.pack) {
      const { pack, revision } = await this.api.getPack(this.project, this.pack.packId);
      this.pack = PackModel.fromJson(pack, revision);
      this.onChanged();
    }
  }

  select(entryId: number | null): void {
    this.view.selected = entryId;
    this.onChanged();
  }

  /** Layer toggles are pure view state: no requests, just re-render. */
  toggleLayer(typeName: string): void {
    if (this.view.hiddenTypes.has(typeName)) {
      this.view.hiddenTypes.delete(typeName);
    } else {
      this.view.hiddenTypes.add(typeName);
    }
    this.onChanged();
  }

  private async mutate<T>(gesture: () => Promise<T>): Promise<T | null> {
    try {
      const result = await gesture();
      await this.checkReconciliation();
      return result;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.notify("info", "pack changed on the server; replaying your edit");
        await this.refetch();
        try {
          const result = await gesture();
          await this.checkReconciliation();
          return result;
        } catch (replayErr) {
          this.notify("error", `edit no longer applies: ${String(replayErr)}`);
          await this.refetch();
          return null;
        }
      }
      this.notify("error", String(err));
      return null;
    }
  }

  private async checkReconciliation(): Promise<void> {
    if (!this.verifyReconciliation || !this.pack) {
      return;
    }
    const { pack, revision } = await this.api.getPack(this.project, this.pack.packId);
    const fresh = PackModel.fromJson(pack, revision);
    if (!fresh.renderEquals(this.pack)) {
      this.notify("error", "local state diverged from the server; reloading");
      this.pack = fresh;
      this.onChanged();
    }
  }

  async createEntry(entry: NewEntry): Promise<number | null> {
    if (!this.pack) {
      return null;
    }
    const created = await this.mutate(async () => {
      const pack = this.pack!;
      const resp = await this.api.createEntry(this.project, pack.packId, pack.revision, entry);
      pack.applyCreate(resp.id, { ...entry, attributes: entry.attributes ?? {} }, resp.revision);
      return resp.id;
    });
    if (created !== null) {
      this.view.selected = created;
      this.onChanged();
    }
    return created;
  }

  async createSpan(begin: number, end: number, typeName: string): Promise<number | null> {
    return this.createEntry({ type: typeName, begin, end, attributes: {} });
  }

  /** Two selected span entries in order: parent first, then child. */
  startLink(parentId: number): void {
    this.linkDraftParent = parentId;
    this.notify("info", `link started from #${parentId}; click the child span`);
  }

  async completeLink(childId: number, typeName: string): Promise<number | null> {
    const parentId = this.linkDraftParent;
    this.linkDraftParent = null;
    if (parentId === null) {
      return null;
    }
    if (parentId === childId) {
      this.notify("error", "a link needs two different entries");
      return null;
    }
    return this.createEntry({ type: typeName, parent: parentId, child: childId, attributes: {} });
  }

  toggleGroupMember(entryId: number): void {
    if (this.groupDraft.has(entryId)) {
      this.groupDraft.delete(entryId);
    } else {
      this.groupDraft.add(entryId);
    }
    this.onChanged();
  }

  async createGroup(typeName: string): Promise<number | null> {
    if (this.groupDraft.size === 0) {
      this.notify("error", "pick group members first");
      return null;
    }
    const members = [...this.groupDraft].sort((a, b) => a - b);
    const id = await this.createEntry({ type: typeName, members, attributes: {} });
    if (id !== null) {
      this.groupDraft.clear();
    }
    return id;
  }

  async editAttributes(entryId: number, changes: Record<string, unknown>): Promise<boolean> {
    if (!this.pack) {
      return false;
    }
    const done = await this.mutate(async () => {
      const pack = this.pack!;
      const resp = await this.api.patchEntry(
        this.project,
        pack.packId,
        entryId,
        pack.revision,
        changes,
        null,
      );
      pack.applyPatch(entryId, changes, null, resp.revision);
      return true;
    });
    this.onChanged();
    return done === true;
  }

  async moveSpan(entryId: number, begin: number, end: number): Promise<boolean> {
    if (!this.pack) {
      return false;
    }
    const done = await this.mutate(async () => {
      const pack = this.pack!;
      const resp = await this.api.patchEntry(
        this.project,
        pack.packId,
        entryId,
        pack.revision,
        null,
        [begin, end],
      );
      pack.applyPatch(entryId, null, [begin, end], resp.revision);
      return true;
    });
    this.onChanged();
    return done === true;
  }

  async deleteEntry(entryId: number, cascade: boolean): Promise<boolean> {
    if (!this.pack) {
      return false;
    }
    const done = await this.mutate(async () => {
      const pack = this.pack!;
      await this.api.deleteEntry(this.project, pack.packId, entryId, pack.revision, cascade);
      return true;
    });
    // cascades happen server-side; pull the authoritative result
    await this.refetch();
    if (this.view.selected === entryId) {
      this.view.selected = null;
    }
    this.onChanged();
    return done === true;
  }
}

/** Two-document review controller: side-by-side rendering plus the
 * machine-suggestion accept/reject queue. */
export class TwoDocController {
  view: TwoDocState = emptyTwoDocState();
  left: PackModel | null = null;
  right: PackModel | null = null;
  leftAlias = "";
  rightAlias = "";
  crossLinks: import("./types.js").CrossLinkJson[] = [];
  queue: SuggestionJson[] = [];
  threshold = 0.5;
  spanType = "EventMention";
  onChanged: () => void = () => {};

  constructor(
    readonly api: ApiClient,
    readonly project: string,
    readonly multipack: string,
    readonly ontology: OntologyIndex,
    readonly notify: Notice = () => {},
  ) {}

  async open(): Promise<void> {
    const mp = await this.api.getMultipack(this.project, this.multipack);
    const aliases = Object.keys(mp.packs);
    if (aliases.length !== 2) {
      throw new Error(`two-document view needs exactly 2 packs, got ${aliases.length}`);
    }
    [this.leftAlias, this.rightAlias] = aliases;
    this.left = PackModel.fromJson(mp.packs[this.leftAlias], 0);
    this.right = PackModel.fromJson(mp.packs[this.rightAlias], 0);
    this.crossLinks = mp.cross_links;
    await this.refreshQueue();
  }

  async refreshQueue(): Promise<void> {
    this.queue = await this.api.suggestions(this.project, this.multipack, {
      threshold: this.threshold,
      spanType: this.spanType,
    });
    this.emphasizeCurrent();
    this.onChanged();
  }

  current(): SuggestionJson | null {
    return this.queue.length > 0 ? this.queue[0] : null;
  }

  private emphasizeCurrent(): void {
    this.view.emphasizeLeft.clear();
    this.view.emphasizeRight.clear();
    const current = this.current();
    if (current) {
      const [leftAlias, leftId] = current.left;
      const [, rightId] = current.right;
      if (leftAlias === this.leftAlias) {
        this.view.emphasizeLeft.add(leftId);
        this.view.emphasizeRight.add(rightId);
      } else {
        this.view.emphasizeRight.add(leftId);
        this.view.emphasizeLeft.add(rightId);
      }
    }
  }

  async decide(accept: boolean): Promise<void> {
    const current = this.current();
    if (!current) {
      return;
    }
    try {
      if (accept) {
        await this.api.acceptSuggestion(this.project, this.multipack, current.id);
        const mp = await this.api.getMultipack(this.project, this.multipack);
        this.crossLinks = mp.cross_links;
      } else {
        await this.api.rejectSuggestion(this.project, this.multipack, current.id);
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.notify("info", "suggestion already decided elsewhere; refreshing the queue");
      } else {
        this.notify("error", String(err));
      }
    }
    await this.refreshQueue();
  }
}

// ---------------------------------------------------------------------------
// DOM wiring
// ---------------------------------------------------------------------------

function option(value: string): HTMLOptionElement {
  const el = document.createElement("option");
  el.value = value;
  el.textContent = value;
  return el;
}

export async function boot(root: HTMLElement, apiBase: string): Promise<void> {
  const api = new ApiClient(apiBase);
  root.innerHTML = `
    <header>
      <h1>annopack</h1>
      <label>project <select id="project"></select></label>
      <label>mode
        <select id="mode">
          <option value="single">single document</option>
          <option value="two">two documents</option>
        </select>
      </label>
      <span id="notice" class="notice"></span>
    </header>
    <div id="workspace"></div>
  `;
  const notice = root.querySelector<HTMLElement>("#notice")!;
  const notify: Notice = (kind, message) => {
    notice.textContent = message;
    notice.dataset.kind = kind;
  };
  const projectSel = root.querySelector<HTMLSelectElement>("#project")!;
  const modeSel = root.querySelector<HTMLSelectElement>("#mode")!;
  const workspace = root.querySelector<HTMLElement>("#workspace")!;

  for (const name of await api.projects()) {
    projectSel.appendChild(option(name));
  }

  const openProject = async () => {
    const project = projectSel.value;
    if (!project) {
      workspace.textContent = "no projects in this store";
      return;
    }
    const ontology = new OntologyIndex((await api.ontology(project)).types);
    if (modeSel.value === "single") {
      await singleDocView(workspace, api, project, ontology, notify);
    } else {
      await twoDocView(workspace, api, project, ontology, notify);
    }
  };
  projectSel.addEventListener("change", openProject);
  modeSel.addEventListener("change", openProject);
  await openProject();
}

async function singleDocView(
  workspace: HTMLElement,
  api: ApiClient,
  project: string,
  ontology: OntologyIndex,
  notify: Notice,
): Promise<void> {
  workspace.innerHTML = `
    <div class="toolbar">
      <label>pack <select id="pack"></select></label>
      <label>span type <select id="span-type"></select></label>
      <button id="create-span">annotate selection</button>
      <label>link type <select id="link-type"></select></label>
      <button id="start-link">link from selected</button>
      <button id="create-group">group picked</button>
      <label><input type="checkbox" id="cascade"> cascade</label>
      <button id="delete">delete selected</button>
    </div>
    <div class="layers" id="layers"></div>
    <div class="main">
      <div id="doc" class="doc-host"></div>
      <aside id="panel"></aside>
    </div>
  `;
  const controller = new SingleDocController(api, project, ontology, notify, true);
  const packSel = workspace.querySelector<HTMLSelectElement>("#pack")!;
  const spanTypeSel = workspace.querySelector<HTMLSelectElement>("#span-type")!;
  const linkTypeSel = workspace.querySelector<HTMLSelectElement>("#link-type")!;
  const doc = workspace.querySelector<HTMLElement>("#doc")!;
  const panel = workspace.querySelector<HTMLElement>("#panel")!;
  const layers = workspace.querySelector<HTMLElement>("#layers")!;

  for (const name of ontology.typesWithRoot("Span")) {
    spanTypeSel.appendChild(option(name));
  }
  for (const name of ontology.typesWithRoot("Link")) {
    linkTypeSel.appendChild(option(name));
  }

  const redraw = () => {
    if (!controller.pack) {
      return;
    }
    renderDocument(doc, controller.pack, ontology, controller.view);
    const selected =
      controller.view.selected !== null
        ? controller.pack.get(controller.view.selected) ?? null
        : null;
    renderAttributePanel(panel, selected, ontology, (changes) => {
      if (selected) {
        void controller.editAttributes(selected.id, changes);
      }
    });
    layers.textContent = "layers: ";
    const present = [...new Set(controller.pack.sortedEntries().map((e) => e.type))].sort();
    for (const typeName of present) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = !controller.view.hiddenTypes.has(typeName);
      box.addEventListener("change", () => controller.toggleLayer(typeName));
      label.appendChild(box);
      label.appendChild(document.createTextNode(typeName));
      layers.appendChild(label);
    }
  };
  controller.onChanged = redraw;

  doc.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-entry-id]");
    if (!target) {
      return;
    }
    const entryId = Number(target.dataset.entryId);
    if (event.ctrlKey || event.metaKey) {
      controller.toggleGroupMember(entryId);
      notify("info", `group draft: ${[...controller.groupDraft].join(", ") || "empty"}`);
      return;
    }
    if (controller.linkDraftParent !== null) {
      void controller.completeLink(entryId, linkTypeSel.value);
      return;
    }
    controller.select(entryId);
  });

  workspace.querySelector("#create-span")!.addEventListener("click", () => {
    const offsets = selectionOffsets(doc, window.getSelection());
    if (!offsets) {
      notify("error", "select some text first");
      return;
    }
    void controller.createSpan(offsets[0], offsets[1], spanTypeSel.value);
    window.getSelection()?.removeAllRanges();
  });
  workspace.querySelector("#start-link")!.addEventListener("click", () => {
    if (controller.view.selected === null) {
      notify("error", "select the parent span first");
      return;
    }
    controller.startLink(controller.view.selected);
  });
  workspace.querySelector("#create-group")!.addEventListener("click", () => {
    void controller.createGroup("Group");
  });
  workspace.querySelector("#delete")!.addEventListener("click", () => {
    const cascade = workspace.querySelector<HTMLInputElement>("#cascade")!.checked;
    if (controller.view.selected !== null) {
      void controller.deleteEntry(controller.view.selected, cascade);
    }
  });

  const packs = await api.packs(project);
  for (const packId of packs) {
    packSel.appendChild(option(packId));
  }
  packSel.addEventListener("change", () => void controller.open(packSel.value));
  if (packs.length > 0) {
    await controller.open(packs[0]);
  } else {
    doc.textContent = "project has no packs";
  }
}

async function twoDocView(
  workspace: HTMLElement,
  api: ApiClient,
  project: string,
  ontology: OntologyIndex,
  notify: Notice,
): Promise<void> {
  const multipacks = await api.multipacks(project);
  if (multipacks.length === 0) {
    workspace.textContent = "project has no multipacks";
    return;
  }
  workspace.innerHTML = `
    <div class="toolbar">
      <label>multipack <select id="mp"></select></label>
      <label>span type <input id="span-type" value="EventMention" size="14"></label>
      <label>threshold <input id="threshold" type="number" min="0" max="1" step="0.05" value="0.5"></label>
      <span id="suggestion-label" class="suggestion-label"></span>
      <button id="accept">accept</button>
      <button id="reject">reject</button>
    </div>
    <div id="two-doc"></div>
  `;
  const mpSel = workspace.querySelector<HTMLSelectElement>("#mp")!;
  for (const name of multipacks) {
    mpSel.appendChild(option(name));
  }
  const host = workspace.querySelector<HTMLElement>("#two-doc")!;
  const label = workspace.querySelector<HTMLElement>("#suggestion-label")!;

  let controller: TwoDocController | null = null;
  const openMp = async () => {
    controller = new TwoDocController(api, project, mpSel.value, ontology, notify);
    controller.threshold = Number(
      workspace.querySelector<HTMLInputElement>("#threshold")!.value,
    );
    controller.spanType = workspace.querySelector<HTMLInputElement>("#span-type")!.value;
    controller.onChanged = () => {
      if (!controller?.left || !controller.right) {
        return;
      }
      renderTwoDoc(
        host,
        {
          leftAlias: controller.leftAlias,
          rightAlias: controller.rightAlias,
          left: controller.left,
          right: controller.right,
          crossLinks: controller.crossLinks,
        },
        ontology,
        controller.view,
      );
      const current = controller.current();
      label.textContent = current
        ? `suggestion ${current.id} (${current.score.toFixed(3)}): ` +
          `${current.left[0]}#${current.left[1]} ↔ ${current.right[0]}#${current.right[1]}`
        : "queue empty";
    };
    await controller.open();
  };
  mpSel.addEventListener("change", () => void openMp());
  workspace.querySelector("#accept")!.addEventListener("click", () => void controller?.decide(true));
  workspace.querySelector("#reject")!.addEventListener("click", () => void controller?.decide(false));
  workspace
    .querySelector<HTMLInputElement>("#threshold")!
    .addEventListener("change", () => void openMp());
  await openMp();
}
