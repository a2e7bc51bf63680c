/** Pure view-model builders: model in, renderable structures out.
 *
 * The DOM layer and the tests consume the same structures, so everything
 * the browser shows is asserted against recorded server payloads.
 */

import { UiSessionModel } from "./model.js";

export type Highlight = "none" | "active" | "constraint";

export interface EditorLine {
  source: string;
  text: string;
  span: [number, number, number, number];
  highlight: Highlight;
}

export function buildEditorView(model: UiSessionModel): EditorLine[] {
  return model.candidates.map((group) => ({
    source: group.source,
    text: group.text,
    span: group.span,
    highlight: group.is_constraint ? "constraint" : "active",
  }));
}

export interface TruthAtom {
  atom: string;
  locked: boolean;
}

export interface TruthView {
  trueList: TruthAtom[];
  undecidedList: TruthAtom[];
  falseList: TruthAtom[];
  stepEnabled: boolean;
  blocked: boolean;
}

export function buildTruthView(model: UiSessionModel): TruthView {
  const view: TruthView = {
    trueList: [],
    undecidedList: [],
    falseList: [],
    stepEnabled: model.stepEnabled,
    blocked: model.blocked,
  };
  const instance = model.selectedInstance;
  const state = model.state;
  if (!instance || !state) {
    return view;
  }
  for (const atom of instance.atoms) {
    if (state.pos.includes(atom)) {
      view.trueList.push({ atom, locked: true });
    } else if (state.neg.includes(atom)) {
      view.falseList.push({ atom, locked: true });
    } else if (model.draft.true.has(atom)) {
      view.trueList.push({ atom, locked: false });
    } else if (model.draft.false.has(atom)) {
      view.falseList.push({ atom, locked: false });
    } else {
      view.undecidedList.push({ atom, locked: false });
    }
  }
  return view;
}

export interface PredicateGroup {
  predicate: string;
  atoms: string[];
}

export interface StateView {
  rules: string[];
  pos: PredicateGroup[];
  neg: PredicateGroup[];
  unfounded: string[][];
  stable: boolean;
  status: string;
}

function groupByPredicate(atoms: string[]): PredicateGroup[] {
  const groups = new Map<string, string[]>();
  for (const atom of atoms) {
    const open = atom.indexOf("(");
    const predicate = open < 0 ? atom : atom.slice(0, open);
    const bucket = groups.get(predicate);
    if (bucket) {
      bucket.push(atom);
    } else {
      groups.set(predicate, [atom]);
    }
  }
  return [...groups.entries()]
    .sort((a, b) => (a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0))
    .map(([predicate, members]) => ({ predicate, atoms: members }));
}

export function buildStateView(model: UiSessionModel): StateView | null {
  if (!model.state) {
    return null;
  }
  return {
    rules: model.state.rules,
    pos: groupByPredicate(model.state.pos),
    neg: groupByPredicate(model.state.neg),
    unfounded: model.state.unfounded,
    stable: model.state.stable,
    status: model.state.status,
  };
}

export interface TreeViewNode {
  id: number;
  label: string;
  parent: number | null;
  onActivePath: boolean;
  isActiveLeaf: boolean;
}

export function buildTreeView(model: UiSessionModel): TreeViewNode[] {
  const active = new Set(model.activePath());
  const nodes = [...model.tree.values()].sort(
    (a, b) => a.payload.node - b.payload.node,
  );
  return nodes.map((node) => {
    const edge = node.payload.edge;
    let label = "start";
    if (edge && edge.op === "step") {
      label = `step ${edge.rule}`;
    } else if (edge && edge.op === "jump") {
      label = `jump (${edge.rules.length} selections)`;
    }
    return {
      id: node.payload.node,
      label,
      parent: node.payload.parent,
      onActivePath: active.has(node.payload.node),
      isActiveLeaf: node.payload.node === model.activeNode,
    };
  });
}
