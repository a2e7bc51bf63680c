"""Sessions: lifecycle, the JSON message protocol, and persistence.

A session owns one computation tree over one ground program.  Every
state-changing method funnels through `handle`, which keeps replay
deterministic: the same message sequence always produces byte-identical
state payloads.
"""

from __future__ import annotations

import hashlib
import json
import re
import uuid

import jsonschema
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from . import __version__
from .caps import DEFAULT_CAPS, Caps
from .errors import (
    CapExceededError,
    DesynchronizedError,
    EngineError,
    NoAnswerSetError,
    ParseError,
    PreconditionError,
    SearchExhaustedError,
    SessionFormatError,
    UnfoundedOverflowError,
    UnknownNodeError,
    UnknownRuleError,
)
from .analysis import analyze
from .grounding import GROUNDER_VERSION, GroundingResult, ground
from .model import Atom, CRule, GroundProgram, parse_atom, rule_active, sorted_atoms
from .semantics import flp_reduct
from .source import SourceProgram, parse
from .stepping import (
    ONLY_EMPTY,
    ComputationTree,
    JumpEdge,
    State,
    StepDelta,
    StepEdge,
    active_instances,
    admits_successor,
    apply_jump,
    apply_step,
    computation_status,
    expand_jump,
    resolve_selection,
    retract,
    state_status,
    validate_assignment,
)

SESSION_FORMAT = "acpstep-session"
SESSION_VERSION = 1

_METHODS = (
    "candidates.list",
    "instances.list",
    "step.validate",
    "step.apply",
    "jump.apply",
    "jump.expand",
    "retract",
    "status",
    "analyze",
    "state.get",
    "session.save",
)


@dataclass(frozen=True)
class SessionSettings:
    caps: Caps = DEFAULT_CAPS
    strategy: str = "auto"

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "caps": {
                "enumeration": self.caps.enumeration,
                "atoms": self.caps.atoms,
                "subsets": self.caps.subsets,
                "unfounded": self.caps.unfounded,
                "ground_instances": self.caps.ground_instances,
                "search_nodes": self.caps.search_nodes,
            },
        }

    @staticmethod
    def from_json(data: dict) -> "SessionSettings":
        caps = Caps(**data.get("caps", {}))
        return SessionSettings(caps=caps, strategy=data.get("strategy", "auto"))


class Session:
    """One stepping session over a fixed ground program."""

    def __init__(
        self,
        source_text: str,
        settings: Optional[SessionSettings] = None,
        session_id: Optional[str] = None,
    ):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.settings = settings or SessionSettings()
        self.source_text = source_text
        self.source: SourceProgram = parse(source_text)
        self.grounding: GroundingResult = ground(self.source, self.settings.caps)
        self.program: GroundProgram = self.grounding.program
        self.tree = ComputationTree()
        self.desynchronized = False
        self.rule_id: dict[CRule, str] = {
            r: f"g{i}" for i, r in enumerate(self.program.rules)
        }
        self.rule_by_id: dict[str, CRule] = {v: k for k, v in self.rule_id.items()}
        self.rule_by_text: dict[str, CRule] = {str(r): r for r in self.program.rules}

    def mark_desynchronized(self) -> None:
        self.desynchronized = True

    # -- payloads ----------------------------------------------------------

    def atom_list(self, atoms: Iterable[Atom]) -> list[str]:
        return [str(a) for a in sorted_atoms(atoms)]

    def state_payload(self, node_id: int) -> dict:
        node = self.tree.node(node_id)
        s = node.state
        unfounded = sorted(
            (s for s in s.unfounded if s), key=lambda x: (len(x), sorted_atoms(x))
        )
        return {
            "node": node.id,
            "parent": node.parent,
            "edge": self._edge_payload(node.edge),
            "rules": sorted(
                (self.rule_id[r] for r in s.rules), key=lambda g: int(g[1:])
            ),
            "pos": self.atom_list(s.pos),
            "neg": self.atom_list(s.neg),
            "unfounded": [self.atom_list(x) for x in unfounded],
            "stable": s.stable,
            "status": state_status(self.program, s),
        }

    def _edge_payload(self, edge) -> Optional[dict]:
        if edge is None:
            return None
        if isinstance(edge, StepEdge):
            return {
                "op": "step",
                "rule": self.rule_id[edge.delta.rule],
                "true": self.atom_list(edge.delta.true),
                "false": self.atom_list(edge.delta.false),
            }
        return {
            "op": "jump",
            "rules": [self._normalize_label(x) for x in edge.selected],
            "model": self.atom_list(edge.model),
        }

    def _normalize_label(self, label: str) -> str:
        if label in self.rule_by_text:
            return self.rule_id[self.rule_by_text[label]]
        return label

    def _instance_payload(
        self, r: CRule, state: State, source_id: Optional[str] = None
    ) -> dict:
        substs = [
            dict(p.substitution)
            for p in r.provenance
            if source_id is None or p.source_id == source_id
        ]
        return {
            "id": self.rule_id[r],
            "text": str(r),
            "atoms": self.atom_list(r.domain_set),
            "active": rule_active(r, state.pos),
            "considered": r in state.rules,
            "steppable": r not in state.rules and admits_successor(state, r),
            "substs": substs,
        }

    # -- method handlers -----------------------------------------------------

    def resolve_rule(self, params: dict) -> CRule:
        ref = params.get("rule")
        if not isinstance(ref, str):
            raise UnknownRuleError("missing rule reference")
        if ref in self.rule_by_id:
            return self.rule_by_id[ref]
        if ref in self.rule_by_text:
            return self.rule_by_text[ref]
        if re.fullmatch(r"r\d+", ref):
            matches = [
                r
                for r in self.grounding.instances_of(ref)
                if _subst_matches(r, ref, params.get("subst", {}))
            ]
            if len(matches) == 1:
                return matches[0]
            if not matches:
                raise UnknownRuleError(f"no instance of {ref} matches the substitution")
            raise UnknownRuleError(
                f"{len(matches)} instances of {ref} match; narrow the substitution"
            )
        raise UnknownRuleError(f"unknown rule reference: {ref}")

    def _delta_from_params(self, params: dict) -> StepDelta:
        rule = self.resolve_rule(params)
        true = frozenset(parse_atom(t) for t in params.get("true", []))
        false = frozenset(parse_atom(t) for t in params.get("false", []))
        return StepDelta(rule, true, false)

    def candidates_list(self) -> dict:
        state = self.tree.active_state
        per_source: dict[str, list[CRule]] = {}
        for r in active_instances(self.program, state):
            for p in r.provenance:
                per_source.setdefault(p.source_id, []).append(r)
        out = []
        for st in self.source.statements:
            instances = per_source.get(st.id)
            if not instances:
                continue
            out.append(
                {
                    "source": st.id,
                    "text": st.text,
                    "is_constraint": st.is_constraint(),
                    "span": [
                        st.span.line,
                        st.span.column,
                        st.span.end_line,
                        st.span.end_column,
                    ],
                    "instances": [
                        self._instance_payload(r, state, st.id) for r in instances
                    ],
                }
            )
        return {"candidates": out}

    def instances_list(self, params: dict) -> dict:
        source_id = params.get("rule")
        if not isinstance(source_id, str):
            raise UnknownRuleError("missing rule reference")
        rules = self.grounding.instances_of(source_id)
        filter_text = params.get("filter", "")
        if filter_text:
            bindings = _parse_filter(filter_text)
            rules = tuple(
                r for r in rules if _subst_matches(r, source_id, bindings)
            )
        state = self.tree.active_state
        return {"instances": [self._instance_payload(r, state, source_id) for r in rules]}

    def step_validate(self, params: dict) -> dict:
        delta = self._delta_from_params(params)
        check = validate_assignment(self.tree.active_state, delta)
        out: dict = {"ok": check.ok}
        if not check.ok:
            out["condition"] = check.condition
            out["detail"] = check.detail
        return out

    def step_apply(self, params: dict) -> dict:
        delta = self._delta_from_params(params)
        check = validate_assignment(self.tree.active_state, delta)
        if not check.ok:
            raise PreconditionError(f"{check.condition}: {check.detail}")
        state = apply_step(self.tree.active_state, delta, self.settings.caps)
        node = self.tree.add_child(state, StepEdge(delta))
        return {"node": node.id, "state": self.state_payload(node.id)}

    def jump_apply(self, params: dict) -> dict:
        refs = params.get("rules", [])
        selected: list[Union[str, CRule]] = []
        for ref in refs:
            if isinstance(ref, str) and re.fullmatch(r"r\d+", ref):
                selected.append(ref)
            else:
                selected.append(self.resolve_rule({"rule": ref}))
        apply_jump(self.program, self.tree, selected, self.settings.caps)
        node = self.tree.active_leaf
        return {"node": node, "state": self.state_payload(node)}

    def jump_expand(self, params: dict) -> dict:
        node_id = params.get("node", self.tree.active_leaf)
        node = self.tree.node(node_id)
        if not isinstance(node.edge, JumpEdge) or node.parent is None:
            raise UnknownNodeError(f"node {node_id} is not a jump target")
        parent = self.tree.node(node.parent)
        steps = expand_jump(self.program, parent.state, node.state, self.settings.caps)
        return {
            "steps": [
                {
                    "rule": self.rule_id[d.rule],
                    "text": str(d.rule),
                    "true": self.atom_list(d.true),
                    "false": self.atom_list(d.false),
                }
                for d in steps
            ]
        }

    def retract_to(self, params: dict) -> dict:
        node_id = params.get("node")
        if not isinstance(node_id, int):
            raise UnknownNodeError("missing node id")
        retract(self.tree, node_id)
        return {"node": node_id, "state": self.state_payload(node_id)}

    def status(self, params: dict) -> dict:
        report = computation_status(
            self.program,
            self.tree,
            check_failed=bool(params.get("check_failed")),
            caps=self.settings.caps,
        )
        out: dict = {"status": report.status, "checked_failure": report.failure_checked}
        if report.failure_checked:
            out["failed_at"] = report.failed_at
        return out

    def state_get(self, params: dict) -> dict:
        node_id = params.get("node", self.tree.active_leaf)
        return {"state": self.state_payload(node_id)}

    # -- persistence -----------------------------------------------------------

    def save(self) -> dict:
        nodes = []
        for node_id in sorted(self.tree.nodes):
            node = self.tree.nodes[node_id]
            nodes.append(
                {
                    "id": node.id,
                    "parent": node.parent,
                    "edge": self._edge_payload(node.edge),
                }
            )
        return {
            "format": SESSION_FORMAT,
            "version": SESSION_VERSION,
            "engine": __version__,
            "grounder": GROUNDER_VERSION,
            "id": self.id,
            "source": self.source_text,
            "source_sha256": hashlib.sha256(self.source_text.encode()).hexdigest(),
            "settings": self.settings.to_json(),
            "ground_rules": [str(r) for r in self.program.rules],
            "tree": nodes,
            "active_leaf": self.tree.active_leaf,
        }

    @staticmethod
    def load(data: dict) -> "Session":
        for key in ("format", "version", "source", "source_sha256", "tree", "active_leaf"):
            if key not in data:
                raise SessionFormatError(f"missing field {key!r}")
        if data["format"] != SESSION_FORMAT or data["version"] != SESSION_VERSION:
            raise SessionFormatError("unsupported session format or version")
        digest = hashlib.sha256(data["source"].encode()).hexdigest()
        if digest != data["source_sha256"]:
            raise SessionFormatError("source hash mismatch")
        session = Session(
            data["source"],
            SessionSettings.from_json(data.get("settings", {})),
            session_id=data.get("id"),
        )
        ground_texts = [str(r) for r in session.program.rules]
        if ground_texts != data.get("ground_rules", ground_texts):
            raise SessionFormatError("ground program mismatch; grounder changed")
        for node in sorted(data["tree"], key=lambda n: n["id"]):
            if node["id"] == 0:
                continue
            session.tree.active_leaf = node["parent"]
            edge = node.get("edge") or {}
            if edge.get("op") == "step":
                delta = StepDelta(
                    session.rule_by_id[edge["rule"]],
                    frozenset(parse_atom(t) for t in edge.get("true", [])),
                    frozenset(parse_atom(t) for t in edge.get("false", [])),
                )
                state = apply_step(
                    session.tree.active_state, delta, session.settings.caps
                )
                created = session.tree.add_child(state, StepEdge(delta))
            elif edge.get("op") == "jump":
                created = session._replay_jump(edge)
            else:
                raise SessionFormatError(f"unknown edge {edge!r}")
            if created.id != node["id"]:
                raise SessionFormatError("tree nodes are not in creation order")
        leaf = data["active_leaf"]
        if leaf not in session.tree.nodes:
            raise SessionFormatError("active leaf missing from tree")
        session.tree.active_leaf = leaf
        return session

    def _replay_jump(self, edge: dict):
        model = frozenset(parse_atom(t) for t in edge.get("model", []))
        selected: list[Union[str, CRule]] = []
        for ref in edge.get("rules", []):
            if re.fullmatch(r"r\d+", ref):
                selected.append(ref)
            else:
                selected.append(self.resolve_rule({"rule": ref}))
        labels, chosen = resolve_selection(self.program, selected)
        leaf = self.tree.active_state
        extra = tuple(r for r in chosen if r not in leaf.rules)
        added = flp_reduct(extra, model)
        rules = leaf.rules | set(added)
        domain = leaf.domain
        for r in rules:
            domain |= r.domain_set
        state = State(frozenset(rules), model, leaf.neg | (domain - model), ONLY_EMPTY)
        return self.tree.add_child(state, JumpEdge(labels, added, model))


def _parse_filter(text: str) -> dict:
    """Dot-separated variable assignments, e.g. "X=1.Y=t"."""
    bindings: dict = {}
    for piece in text.split("."):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise EngineError(f"bad filter component {piece!r}; expected VAR=term")
        var, value = piece.split("=", 1)
        var = var.strip()
        value = value.strip()
        bindings[var] = int(value) if re.fullmatch(r"-?\d+", value) else value
    return bindings


def _subst_matches(rule: CRule, source_id: str, bindings: dict) -> bool:
    for p in rule.provenance:
        if p.source_id != source_id:
            continue
        subst = dict(p.substitution)
        if all(subst.get(var) == value for var, value in bindings.items()):
            return True
    return False


def session_create(
    program_text: str, settings: Optional[SessionSettings] = None
) -> Session:
    return Session(program_text, settings)


def session_save(session: Session) -> bytes:
    return json.dumps(session.save(), sort_keys=True, indent=1).encode()


def session_load(payload: bytes) -> Session:
    try:
        data = json.loads(payload.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise SessionFormatError(f"not a session file: {err}") from err
    if not isinstance(data, dict):
        raise SessionFormatError("not a session file: expected an object")
    return Session.load(data)


# --------------------------------------------------------------------------
# Message envelope
# --------------------------------------------------------------------------

_ERROR_CODES = {
    NoAnswerSetError: "no-answer-set",
    CapExceededError: "cap-exhausted",
    SearchExhaustedError: "cap-exhausted",
    UnfoundedOverflowError: "cap-exhausted",
    UnknownRuleError: "unknown-rule",
    UnknownNodeError: "unknown-node",
    PreconditionError: "invalid-step",
    DesynchronizedError: "desynchronized",
    ParseError: "parse-error",
}

_MUTATING = ("step.apply", "jump.apply", "retract")

_REQUEST_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {},
        "method": {"type": "string"},
        "params": {"type": "object"},
    },
    "required": ["method"],
    "additionalProperties": False,
}


def validate_envelope(message) -> Optional[str]:
    """None when the message is a well-formed request, else the complaint."""
    try:
        jsonschema.validate(message, _REQUEST_SCHEMA)
    except jsonschema.ValidationError as err:
        return err.message
    return None


def error_code(err: Exception) -> str:
    for cls, code in _ERROR_CODES.items():
        if isinstance(err, cls):
            return code
    return "engine-error"


def handle(session: Session, message: dict) -> tuple[dict, list[dict]]:
    """Dispatch one protocol message; returns (response, pushed events)."""
    message_id = message.get("id") if isinstance(message, dict) else None
    complaint = validate_envelope(message)
    if complaint is not None:
        return (
            {
                "id": message_id,
                "error": {"code": "invalid-params", "message": complaint},
            },
            [],
        )
    method = message["method"]
    params = message.get("params") or {}
    if method not in _METHODS:
        return (
            {
                "id": message_id,
                "error": {"code": "unknown-method", "message": f"unknown method {method}"},
            },
            [],
        )
    if session.desynchronized and method in _MUTATING:
        return (
            {
                "id": message_id,
                "error": {
                    "code": "desynchronized",
                    "message": "source changed after stepping started",
                },
            },
            [],
        )
    try:
        if method == "candidates.list":
            result = session.candidates_list()
        elif method == "instances.list":
            result = session.instances_list(params)
        elif method == "step.validate":
            result = session.step_validate(params)
        elif method == "step.apply":
            result = session.step_apply(params)
        elif method == "jump.apply":
            result = session.jump_apply(params)
        elif method == "jump.expand":
            result = session.jump_expand(params)
        elif method == "retract":
            result = session.retract_to(params)
        elif method == "status":
            result = session.status(params)
        elif method == "analyze":
            result = analyze(session.program, session.settings.caps)
        elif method == "state.get":
            result = session.state_get(params)
        else:  # session.save
            result = {"session": session.save()}
    except EngineError as err:
        return (
            {
                "id": message_id,
                "error": {"code": error_code(err), "message": str(err)},
            },
            [],
        )
    events = []
    if method in _MUTATING:
        events.append(
            {
                "event": "state.changed",
                "payload": session.state_payload(session.tree.active_leaf),
            }
        )
    return {"id": message_id, "result": result}, events


def replay_script(session: Session, actions: list[dict]) -> list[dict]:
    """Run a step-script; returns the state payload after each action."""
    payloads = []
    for i, action in enumerate(actions):
        op = action.get("op")
        if op == "step":
            method, params = "step.apply", {
                "rule": action.get("rule"),
                "subst": action.get("subst", {}),
                "true": action.get("true", []),
                "false": action.get("false", []),
            }
        elif op == "jump":
            method, params = "jump.apply", {"rules": action.get("rules", [])}
        elif op == "retract":
            method, params = "retract", {"node": action.get("node")}
        else:
            raise SessionFormatError(f"action {i}: unknown op {op!r}")
        response, _events = handle(
            session, {"id": i, "method": method, "params": params}
        )
        if "error" in response:
            raise EngineError(
                f"action {i} ({op}) failed: {response['error']['code']}: "
                f"{response['error']['message']}"
            )
        payloads.append(session.state_payload(session.tree.active_leaf))
    return payloads
