import { OntologyIndex } from "./ontology.js";
import { EntryJson } from "./types.js";

export type AttributeEdit = (attributes: Record<string, unknown>) => void;

function editorFor(kind: string, value: unknown): HTMLElement {
  switch (kind) {
    case "Int":
    case "Float":
    case "EntryRef": {
      const input = document.createElement("input");
      input.type = "number";
      if (kind !== "Float") {
        input.step = "1";
      }
      input.value = value === undefined || value === null ? "" : String(value);
      return input;
    }
    case "Bool": {
      const input = document.createElement("input");
      input.type = "checkbox";
      input.checked = value === true;
      return input;
    }
    case "StrList":
    case "FloatList": {
      const area = document.createElement("textarea");
      area.rows = 2;
      area.value = Array.isArray(value) ? value.join("\n") : "";
      return area;
    }
    default: {
      const input = document.createElement("input");
      input.type = "text";
      input.value = value === undefined || value === null ? "" : String(value);
      return input;
    }
  }
}

function readEditor(kind: string, el: HTMLElement): unknown {
  if (kind === "Bool") {
    return (el as HTMLInputElement).checked;
  }
  const raw = (el as HTMLInputElement | HTMLTextAreaElement).value;
  if (raw.trim() === "") {
    return null; // empty editor removes the attribute
  }
  switch (kind) {
    case "Int":
    case "EntryRef":
      return Number.parseInt(raw, 10);
    case "Float":
      return Number.parseFloat(raw);
    case "StrList":
      return raw.split("\n").filter((line) => line !== "");
    case "FloatList":
      return raw
        .split("\n")
        .filter((line) => line.trim() !== "")
        .map((line) => Number.parseFloat(line));
    default:
      return raw;
  }
}

/** Attribute panel for the selected entry: one kind-appropriate editor per
 * declared attribute, or a read-only raw view for unknown types. */
export function renderAttributePanel(
  container: HTMLElement,
  entry: EntryJson | null,
  ontology: OntologyIndex,
  onEdit: AttributeEdit,
): void {
  container.textContent = "";
  container.classList.add("attr-panel");
  if (!entry) {
    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "Select an entry to inspect its attributes.";
    container.appendChild(hint);
    return;
  }
  const heading = document.createElement("h3");
  heading.textContent = `${entry.type} #${entry.id}`;
  container.appendChild(heading);

  const structural = document.createElement("p");
  structural.className = "structural";
  if (entry.begin !== undefined) {
    structural.textContent = `span [${entry.begin}, ${entry.end})`;
  } else if (entry.parent !== undefined) {
    structural.textContent = `link ${entry.parent} → ${entry.child}`;
  } else if (entry.members !== undefined) {
    structural.textContent = `members [${entry.members.join(", ")}]`;
  } else {
    structural.textContent = "generic entry";
  }
  container.appendChild(structural);

  if (!ontology.has(entry.type)) {
    const raw = document.createElement("pre");
    raw.className = "raw-attrs";
    raw.textContent = JSON.stringify(entry.attributes, null, 2);
    container.appendChild(raw);
    return;
  }

  const declared = ontology.attributesOf(entry.type);
  const form = document.createElement("form");
  const editors: { name: string; kind: string; el: HTMLElement }[] = [];
  for (const spec of declared) {
    const row = document.createElement("label");
    row.className = "attr-row";
    const caption = document.createElement("span");
    caption.textContent = `${spec.name} (${spec.type})`;
    row.appendChild(caption);
    const editor = editorFor(spec.type, entry.attributes[spec.name]);
    editor.setAttribute("data-attr", spec.name);
    row.appendChild(editor);
    editors.push({ name: spec.name, kind: spec.type, el: editor });
    form.appendChild(row);
  }
  if (declared.length > 0) {
    const save = document.createElement("button");
    save.type = "submit";
    save.textContent = "Save attributes";
    form.appendChild(save);
  } else {
    const none = document.createElement("p");
    none.className = "hint";
    none.textContent = "No declared attributes.";
    form.appendChild(none);
  }
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const changes: Record<string, unknown> = {};
    for (const { name, kind, el } of editors) {
      const value = readEditor(kind, el);
      const before = entry.attributes[name];
      const changed =
        value === null ? before !== undefined : JSON.stringify(value) !== JSON.stringify(before);
      if (changed) {
        changes[name] = value;
      }
    }
    if (Object.keys(changes).length > 0) {
      onEdit(changes);
    }
  });
  container.appendChild(form);
}
