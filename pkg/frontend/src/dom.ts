/** Browser wiring: one session, one WebSocket, the three stepping views. */

import { SessionClient } from "./client.js";
import { UiSessionModel } from "./model.js";
import { filterInstances } from "./filter.js";
import {
  CandidateGroup,
  EventFrame,
  InstanceInfo,
  StatePayload,
} from "./protocol.js";
import {
  buildEditorView,
  buildStateView,
  buildTreeView,
  buildTruthView,
} from "./views.js";

const model = new UiSessionModel();
let client: SessionClient | null = null;
let jumpSelection = new Set<string>();

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

async function call(
  method: string,
  params: Record<string, unknown> = {},
): Promise<Record<string, unknown> | null> {
  if (!client) {
    return null;
  }
  const request = { id: 0, method, params };
  try {
    const result = await client.request(method, params);
    model.applyExchange(
      { ...request, id: client.sentFrames[client.sentFrames.length - 1]!.id },
      { id: 0, result },
      [],
    );
    render();
    return result;
  } catch (err) {
    model.lastError = { code: "error", message: String(err) };
    render();
    return null;
  }
}

async function startSession(): Promise<void> {
  const program = el<HTMLTextAreaElement>("program").value;
  const created = await fetch("/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ program }),
  });
  const summary = await created.json();
  if (!created.ok) {
    el("error").textContent = JSON.stringify(summary.error);
    return;
  }
  model.sourceText = program;
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  const socket = new WebSocket(
    `${scheme}://${location.host}/sessions/${summary.id}/ws`,
  );
  socket.addEventListener("message", (message) => {
    client?.receive(String(message.data));
  });
  client = new SessionClient({ send: (text) => socket.send(text) });
  client.onEvent((event: EventFrame) => {
    if (event.event === "state.changed") {
      render();
    }
  });
  socket.addEventListener("open", async () => {
    await call("state.get");
    await call("candidates.list");
  });
}

function render(): void {
  el("error").textContent = model.lastError
    ? `${model.lastError.code}: ${model.lastError.message}`
    : "";
  renderEditor();
  renderInstances();
  renderTruth();
  renderState();
  renderTree();
}

function renderEditor(): void {
  const view = buildEditorView(model);
  const highlights = new Map(view.map((line) => [line.source, line.highlight]));
  const container = el("editor");
  container.textContent = "";
  for (const group of model.candidates) {
    const row = document.createElement("div");
    row.className = `rule ${highlights.get(group.source) ?? "none"}`;
    row.textContent = `${group.source}: ${group.text}`;
    row.onclick = () => {
      void call("instances.list", { rule: group.source });
    };
    const jumpBox = document.createElement("input");
    jumpBox.type = "checkbox";
    jumpBox.checked = jumpSelection.has(group.source);
    jumpBox.onclick = (ev) => {
      ev.stopPropagation();
      if (jumpSelection.has(group.source)) {
        jumpSelection.delete(group.source);
      } else {
        jumpSelection.add(group.source);
      }
    };
    row.prepend(jumpBox);
    container.append(row);
  }
}

function renderInstances(): void {
  const container = el("instances");
  container.textContent = "";
  const filterText = el<HTMLInputElement>("filter").value;
  let shown: InstanceInfo[] = model.instances;
  try {
    shown = filterText ? filterInstances(model.instances, filterText) : shown;
    el("filter-error").textContent = "";
  } catch (err) {
    el("filter-error").textContent = String(err);
  }
  for (const instance of shown) {
    const row = document.createElement("div");
    row.className = instance.steppable ? "instance" : "instance blocked";
    row.textContent = instance.text + (instance.steppable ? "" : " ⛔");
    row.onclick = () => {
      model.selectInstance(instance);
      render();
    };
    container.append(row);
  }
}

async function moveAtom(
  atomText: string,
  where: "true" | "false" | "undecided",
): Promise<void> {
  model.placeAtom(atomText, where);
  renderTruth();
  if (model.draft.rule) {
    await call("step.validate", model.draftParams());
  }
}

function renderTruth(): void {
  const view = buildTruthView(model);
  for (const [idName, list, bucket] of [
    ["truth-true", view.trueList, "true"],
    ["truth-undecided", view.undecidedList, "undecided"],
    ["truth-false", view.falseList, "false"],
  ] as const) {
    const container = el(idName);
    container.textContent = "";
    // each column is a drop target for dragged atoms
    const zone = container.parentElement ?? container;
    zone.ondragover = (ev) => ev.preventDefault();
    zone.ondrop = (ev) => {
      ev.preventDefault();
      const dragged = ev.dataTransfer?.getData("text/plain");
      if (dragged) {
        void moveAtom(dragged, bucket);
      }
    };
    for (const entry of list) {
      const row = document.createElement("div");
      row.className = entry.locked ? "atom locked" : "atom";
      row.textContent = entry.atom;
      if (!entry.locked) {
        row.draggable = true;
        row.ondragstart = (ev) => {
          ev.dataTransfer?.setData("text/plain", entry.atom);
        };
        // click and keyboard cycle through the three lists
        row.tabIndex = 0;
        const cycle = () => {
          const next =
            bucket === "undecided" ? "true" : bucket === "true" ? "false" : "undecided";
          void moveAtom(entry.atom, next);
        };
        row.onclick = cycle;
        row.onkeydown = (ev) => {
          if (ev.key === "Enter" || ev.key === " ") {
            ev.preventDefault();
            cycle();
          }
        };
      }
      container.append(row);
    }
  }
  const stepButton = el<HTMLButtonElement>("step-button");
  stepButton.style.display = view.stepEnabled ? "inline-block" : "none";
  el("blocked").textContent = view.blocked
    ? "⛔ no assignment yields a valid successor"
    : "";
}

function renderState(): void {
  const view = buildStateView(model);
  const container = el("state");
  if (!view) {
    container.textContent = "(no state yet)";
    return;
  }
  const unfounded = view.unfounded.map((s) => `{${s.join(", ")}}`).join(" ");
  container.innerHTML = "";
  const mk = (title: string, body: string) => {
    const section = document.createElement("div");
    const heading = document.createElement("b");
    heading.textContent = title;
    const content = document.createElement("pre");
    content.textContent = body;
    section.append(heading, content);
    container.append(section);
  };
  mk("status", `${view.status}${view.stable ? " (stable)" : ""}`);
  mk(
    "true atoms",
    view.pos.map((g) => `${g.predicate}: ${g.atoms.join(", ")}`).join("\n"),
  );
  mk(
    "false atoms",
    view.neg.map((g) => `${g.predicate}: ${g.atoms.join(", ")}`).join("\n"),
  );
  mk("unfounded sets", unfounded || "(none)");
  mk("considered rules", view.rules.join(", "));
}

function renderTree(): void {
  const container = el("tree");
  container.textContent = "";
  for (const node of buildTreeView(model)) {
    const row = document.createElement("div");
    row.className = node.onActivePath ? "tree-node active" : "tree-node";
    row.textContent =
      `${" ".repeat(depth(node.id))}#${node.id} ${node.label}` +
      (node.isActiveLeaf ? " ◀" : "");
    row.onclick = () => {
      void call("retract", { node: node.id });
    };
    container.append(row);
  }
}

function depth(nodeId: number): number {
  let steps = 0;
  let cursor: number | null = nodeId;
  while (cursor !== null) {
    const node = model.tree.get(cursor);
    cursor = node ? node.payload.parent : null;
    steps += 1;
  }
  return steps - 1;
}

export function mount(): void {
  el("create").onclick = () => {
    void startSession();
  };
  el("step-button").onclick = () => {
    void call("step.apply", model.draftParams()).then(() =>
      call("candidates.list"),
    );
  };
  el("jump-button").onclick = () => {
    void call("jump.apply", { rules: [...jumpSelection].sort() }).then(() => {
      jumpSelection = new Set();
      return call("candidates.list");
    });
  };
  el<HTMLInputElement>("filter").oninput = () => renderInstances();
  render();
}

if (typeof document !== "undefined" && document.getElementById("create")) {
  mount();
}
