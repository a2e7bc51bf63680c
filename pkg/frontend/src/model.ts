/** Client-side session mirror.
 *
 * The model never computes a state itself: the displayed state is always
 * the last payload the server produced, and the Step button is enabled
 * exactly when the server validated the current draft.  Draft edits are
 * optimistic, commits are pessimistic.
 */

import {
  CandidateGroup,
  EventFrame,
  InstanceInfo,
  RequestFrame,
  ResponseFrame,
  StatePayload,
  ValidateResult,
} from "./protocol.js";

export interface TreeNode {
  payload: StatePayload;
  children: number[];
}

export interface Draft {
  rule: string | null;
  true: Set<string>;
  false: Set<string>;
}

export class UiSessionModel {
  sourceText = "";
  /** the state currently rendered; only ever a server payload */
  state: StatePayload | null = null;
  /** every state payload the server delivered, in order */
  stateLog: StatePayload[] = [];
  tree = new Map<number, TreeNode>();
  activeNode = 0;
  candidates: CandidateGroup[] = [];
  selectedSource: string | null = null;
  instances: InstanceInfo[] = [];
  selectedInstance: InstanceInfo | null = null;
  draft: Draft = { rule: null, true: new Set(), false: new Set() };
  /** result of the last step.validate for the current draft */
  validation: ValidateResult | null = null;
  status: string | null = null;
  lastError: { code: string; message: string } | null = null;

  get stepEnabled(): boolean {
    return this.validation !== null && this.validation.ok;
  }

  get blocked(): boolean {
    return this.selectedInstance !== null && !this.selectedInstance.steppable;
  }

  selectInstance(instance: InstanceInfo): void {
    this.selectedInstance = instance;
    this.draft = { rule: instance.id, true: new Set(), false: new Set() };
    this.validation = null;
  }

  /** Move an undecided atom into the true/false/undecided draft bucket. */
  placeAtom(atom: string, where: "true" | "false" | "undecided"): void {
    if (!this.state || !this.selectedInstance) {
      return;
    }
    if (this.state.pos.includes(atom) || this.state.neg.includes(atom)) {
      return; // locked atoms cannot be dragged away
    }
    this.draft.true.delete(atom);
    this.draft.false.delete(atom);
    if (where === "true") {
      this.draft.true.add(atom);
    } else if (where === "false") {
      this.draft.false.add(atom);
    }
    this.validation = null; // stale until the server re-validates
  }

  draftParams(): Record<string, unknown> {
    return {
      rule: this.draft.rule,
      true: [...this.draft.true].sort(),
      false: [...this.draft.false].sort(),
    };
  }

  applyState(payload: StatePayload): void {
    this.state = payload;
    this.stateLog.push(payload);
    this.activeNode = payload.node;
    this.status = payload.status;
    if (!this.tree.has(payload.node)) {
      this.tree.set(payload.node, { payload, children: [] });
      if (payload.parent !== null) {
        const parent = this.tree.get(payload.parent);
        if (parent && !parent.children.includes(payload.node)) {
          parent.children.push(payload.node);
        }
      }
    } else {
      this.tree.get(payload.node)!.payload = payload;
    }
  }

  applyExchange(
    request: RequestFrame,
    response: ResponseFrame,
    events: EventFrame[],
  ): void {
    if (response.error) {
      this.lastError = response.error;
      return;
    }
    this.lastError = null;
    const result = (response.result ?? {}) as Record<string, unknown>;
    switch (request.method) {
      case "candidates.list":
        this.candidates = result["candidates"] as CandidateGroup[];
        break;
      case "instances.list":
        this.selectedSource = (request.params["rule"] as string) ?? null;
        this.instances = result["instances"] as InstanceInfo[];
        break;
      case "step.validate":
        this.validation = result as unknown as ValidateResult;
        break;
      case "step.apply":
      case "jump.apply":
      case "retract":
        this.applyState(result["state"] as StatePayload);
        this.selectedInstance = null;
        this.draft = { rule: null, true: new Set(), false: new Set() };
        this.validation = null;
        break;
      case "state.get":
        this.applyState(result["state"] as StatePayload);
        break;
      case "status":
        this.status = result["status"] as string;
        break;
      default:
        break;
    }
    for (const event of events) {
      if (event.event === "state.changed") {
        // the event mirrors the response payload; track it without
        // double-appending the identical node
        const last = this.stateLog[this.stateLog.length - 1];
        if (!last || last.node !== event.payload.node) {
          this.applyState(event.payload);
        }
      }
    }
  }

  /** Root-to-active-leaf node ids, for emphasis in the computation view. */
  activePath(): number[] {
    const path: number[] = [];
    let cursor: number | null = this.activeNode;
    while (cursor !== null) {
      path.push(cursor);
      const node: TreeNode | undefined = this.tree.get(cursor);
      cursor = node ? node.payload.parent : null;
    }
    return path.reverse();
  }
}
