"""Parser, grounder and pretty-printer for a typed-STRIPS PDDL subset.

Supported: :typing, :strips, :negative-preconditions, negative goal literals,
integer action costs via a per-action ``:cost`` clause. Not supported:
conditional effects, numeric fluents, durative actions, axioms.

Two extensions over vanilla PDDL, both documented in docs/pddl_subset.md:

* A domain may declare several ``:action`` blocks with the same name. They
  are disambiguated at grounding time: instances whose preconditions are not
  relaxed-reachable from the problem's init are pruned, so each agent's
  problem file selects the schema variant it can actually enable. If two
  same-named grounded instances survive one grounding, that is an error.
* ``:cost N`` inside an action body sets a constant integer cost (default 1).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .model import Literal, PlanningTask, build_task


class PddlError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        if line:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class GroundingError(Exception):
    pass


# ---------------------------------------------------------------------------
# S-expression reader with source positions
# ---------------------------------------------------------------------------

@dataclass
class Sym:
    text: str
    line: int
    col: int

    def __str__(self) -> str:
        return self.text


@dataclass
class SList:
    items: list
    line: int
    col: int

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]


def _tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield (c, line, col)
            col += 1
            i += 1
        else:
            start = i
            scol = col
            while i < n and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            yield (text[start:i], line, scol)
    yield (None, line, col)


def _read(text: str) -> SList:
    tokens = _tokenize(text)
    stack: list = []
    root: Optional[SList] = None
    for tok, line, col in tokens:
        if tok is None:
            if stack:
                raise PddlError("unbalanced parenthesis: missing ')'", line, col)
            break
        if tok == "(":
            node = SList([], line, col)
            if stack:
                stack[-1].items.append(node)
            stack.append(node)
        elif tok == ")":
            if not stack:
                raise PddlError("unbalanced parenthesis: unexpected ')'", line, col)
            node = stack.pop()
            if not stack:
                if root is not None:
                    raise PddlError("trailing content after top-level form", line, col)
                root = node
        else:
            if not stack:
                raise PddlError(f"unexpected token {tok!r} outside any form", line, col)
            stack[-1].items.append(Sym(tok.lower(), line, col))
    if root is None:
        raise PddlError("empty input")
    return root


def _expect_sym(node, what: str) -> Sym:
    if not isinstance(node, Sym):
        raise PddlError(f"expected {what}", node.line, node.col)
    return node


def _parse_typed_list(items: Sequence, default_type: str = "object") -> List[Tuple[str, str]]:
    """Parse PDDL typed lists: a b - t c d  ->  [(a,t),(b,t),(c,object),(d,object)]."""
    out: List[Tuple[str, str]] = []
    pending: List[Sym] = []
    it = iter(items)
    for node in it:
        sym = _expect_sym(node, "name in typed list")
        if sym.text == "-":
            try:
                tnode = next(it)
            except StopIteration:
                raise PddlError("dangling '-' in typed list", sym.line, sym.col)
            tname = _expect_sym(tnode, "type name").text
            for p in pending:
                out.append((p.text, tname))
            pending = []
        else:
            pending.append(sym)
    for p in pending:
        out.append((p.text, default_type))
    return out


# ---------------------------------------------------------------------------
# Lifted task
# ---------------------------------------------------------------------------

@dataclass
class Atom:
    predicate: str
    args: Tuple[str, ...]

    def render(self) -> str:
        if self.args:
            return f"({self.predicate} {' '.join(self.args)})"
        return f"({self.predicate})"


@dataclass
class LiftedLiteral:
    atom: Atom
    positive: bool = True

    def render(self) -> str:
        return self.atom.render() if self.positive else f"(not {self.atom.render()})"


@dataclass
class Schema:
    name: str
    params: List[Tuple[str, str]]  # (?var, type)
    pre: List[LiftedLiteral]
    add: List[Atom]
    del_: List[Atom]
    cost: int = 1


@dataclass
class LiftedTask:
    domain_name: str = ""
    problem_name: str = ""
    types: Dict[str, Optional[str]] = field(default_factory=dict)  # type -> parent
    predicates: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    constants: Dict[str, str] = field(default_factory=dict)
    schemas: List[Schema] = field(default_factory=list)
    objects: Dict[str, str] = field(default_factory=dict)  # includes constants
    init: List[Atom] = field(default_factory=list)
    goal: List[LiftedLiteral] = field(default_factory=list)

    def subtypes(self) -> Dict[str, set]:
        """type -> set of types compatible with it (itself and descendants)."""
        down: Dict[str, set] = {t: {t} for t in self.types}
        changed = True
        while changed:
            changed = False
            for t, parent in self.types.items():
                if parent and parent in down and not down[parent] >= down[t]:
                    down[parent] |= down[t]
                    changed = True
        return down

    def objects_of_type(self, tname: str) -> List[str]:
        compat = self.subtypes().get(tname, {tname})
        return sorted(o for o, t in self.objects.items() if t in compat)


# ---------------------------------------------------------------------------
# Domain / problem parsing
# ---------------------------------------------------------------------------

def _parse_literal_form(form, where: str) -> LiftedLiteral:
    if not isinstance(form, SList) or not form.items:
        raise PddlError(f"expected literal in {where}", form.line, form.col)
    head = form[0]
    if isinstance(head, Sym) and head.text == "not":
        if len(form) != 2 or not isinstance(form[1], SList):
            raise PddlError("malformed (not ...) literal", form.line, form.col)
        inner = _parse_atom_form(form[1], where)
        return LiftedLiteral(inner, positive=False)
    return LiftedLiteral(_parse_atom_form(form, where), positive=True)


def _parse_atom_form(form, where: str) -> Atom:
    if not isinstance(form, SList) or not form.items:
        raise PddlError(f"expected atom in {where}", form.line, form.col)
    pred = _expect_sym(form[0], "predicate name").text
    args = tuple(_expect_sym(x, "argument").text for x in form.items[1:])
    return Atom(pred, args)


def _parse_condition(form, where: str) -> List[LiftedLiteral]:
    """A condition is a literal or an (and ...) of literals; () is empty."""
    if isinstance(form, SList) and not form.items:
        return []
    if isinstance(form, SList) and isinstance(form[0], Sym) and form[0].text == "and":
        return [_parse_literal_form(f, where) for f in form.items[1:]]
    return [_parse_literal_form(form, where)]


def parse_domain(text: str) -> LiftedTask:
    root = _read(text)
    if not (isinstance(root[0], Sym) and root[0].text == "define"):
        raise PddlError("domain must start with (define ...)", root.line, root.col)
    lifted = LiftedTask()
    lifted.types["object"] = None
    for section in root.items[1:]:
        if not isinstance(section, SList) or not section.items:
            raise PddlError("malformed domain section", section.line, section.col)
        head = _expect_sym(section[0], "section head").text
        if head == "domain":
            lifted.domain_name = _expect_sym(section[1], "domain name").text
        elif head == ":requirements":
            allowed = {":strips", ":typing", ":negative-preconditions", ":equality",
                       ":action-costs"}
            for req in section.items[1:]:
                r = _expect_sym(req, "requirement").text
                if r not in allowed:
                    raise PddlError(f"unsupported requirement {r}", req.line, req.col)
        elif head == ":types":
            for tname, parent in _parse_typed_list(section.items[1:]):
                lifted.types[tname] = parent
                lifted.types.setdefault(parent, None)
        elif head == ":constants":
            for oname, tname in _parse_typed_list(section.items[1:]):
                lifted.constants[oname] = tname
        elif head == ":predicates":
            for p in section.items[1:]:
                if not isinstance(p, SList) or not p.items:
                    raise PddlError("malformed predicate declaration", p.line, p.col)
                pname = _expect_sym(p[0], "predicate name").text
                ptypes = tuple(t for _, t in _parse_typed_list(p.items[1:]))
                if pname in lifted.predicates:
                    raise PddlError(f"duplicate predicate {pname}", p.line, p.col)
                lifted.predicates[pname] = ptypes
        elif head == ":action":
            lifted.schemas.append(_parse_schema(section))
        else:
            raise PddlError(f"unsupported domain section {head}", section.line, section.col)
    _check_domain(lifted)
    lifted.objects.update(lifted.constants)
    return lifted


def _parse_schema(section: SList) -> Schema:
    name = _expect_sym(section[1], "action name").text
    params: List[Tuple[str, str]] = []
    pre: List[LiftedLiteral] = []
    add: List[Atom] = []
    dele: List[Atom] = []
    cost = 1
    i = 2
    items = section.items
    while i < len(items):
        key = _expect_sym(items[i], "action keyword").text
        if key == ":parameters":
            params = _parse_typed_list(items[i + 1].items)
        elif key == ":precondition":
            pre = _parse_condition(items[i + 1], f"preconditions of {name}")
        elif key == ":effect":
            for lit in _parse_condition(items[i + 1], f"effects of {name}"):
                (add if lit.positive else dele).append(lit.atom)
        elif key == ":cost":
            c = _expect_sym(items[i + 1], "cost value")
            try:
                cost = int(c.text)
            except ValueError:
                raise PddlError("cost must be an integer", c.line, c.col)
            if cost < 0:
                raise PddlError("cost must be non-negative", c.line, c.col)
        else:
            raise PddlError(f"unsupported action keyword {key}", items[i].line, items[i].col)
        i += 2
    for var, _ in params:
        if not var.startswith("?"):
            raise PddlError(f"parameter {var} of {name} must start with '?'",
                            section.line, section.col)
    return Schema(name, params, pre, add, dele, cost)


def _check_domain(lifted: LiftedTask) -> None:
    for tname, parent in lifted.types.items():
        if parent is not None and parent not in lifted.types:
            raise PddlError(f"unknown parent type {parent} of {tname}")
    for schema in lifted.schemas:
        scope = {v: t for v, t in schema.params}
        for t in scope.values():
            if t not in lifted.types:
                raise PddlError(f"unknown type {t} in parameters of {schema.name}")
        for atom in schema.add + schema.del_:
            if atom.predicate == "=":
                raise PddlError(f"'=' cannot appear in effects of {schema.name}")
        atoms = [l.atom for l in schema.pre] + schema.add + schema.del_
        for atom in atoms:
            if atom.predicate == "=":
                if len(atom.args) != 2:
                    raise PddlError(f"arity mismatch for '=' in {schema.name}")
            elif atom.predicate not in lifted.predicates:
                raise PddlError(f"unknown predicate {atom.predicate} in {schema.name}")
            else:
                want = len(lifted.predicates[atom.predicate])
                if len(atom.args) != want:
                    raise PddlError(
                        f"arity mismatch for {atom.predicate} in {schema.name}: "
                        f"got {len(atom.args)}, expected {want}")
            for arg in atom.args:
                if arg.startswith("?") and arg not in scope:
                    raise PddlError(f"unbound variable {arg} in {schema.name}")
                if not arg.startswith("?") and arg not in lifted.constants:
                    raise PddlError(f"unknown constant {arg} in {schema.name}")


def parse_problem(text: str, lifted: LiftedTask) -> LiftedTask:
    """Attach problem objects/init/goal to a parsed domain (returns a copy)."""
    root = _read(text)
    if not (isinstance(root[0], Sym) and root[0].text == "define"):
        raise PddlError("problem must start with (define ...)", root.line, root.col)
    out = LiftedTask(
        domain_name=lifted.domain_name,
        types=dict(lifted.types),
        predicates=dict(lifted.predicates),
        constants=dict(lifted.constants),
        schemas=lifted.schemas,
    )
    out.objects.update(lifted.constants)
    for section in root.items[1:]:
        if not isinstance(section, SList) or not section.items:
            raise PddlError("malformed problem section", section.line, section.col)
        head = _expect_sym(section[0], "section head").text
        if head == "problem":
            out.problem_name = _expect_sym(section[1], "problem name").text
        elif head == ":domain":
            dname = _expect_sym(section[1], "domain name").text
            if dname != lifted.domain_name:
                raise PddlError(f"problem targets domain {dname}, "
                                f"got {lifted.domain_name}", section.line, section.col)
        elif head == ":objects":
            for oname, tname in _parse_typed_list(section.items[1:]):
                if tname not in out.types:
                    raise PddlError(f"unknown type {tname} of object {oname}",
                                    section.line, section.col)
                out.objects[oname] = tname
        elif head == ":init":
            for form in section.items[1:]:
                out.init.append(_parse_atom_form(form, ":init"))
        elif head == ":goal":
            out.goal = _parse_condition(section[1], ":goal")
        else:
            raise PddlError(f"unsupported problem section {head}", section.line, section.col)
    for atom in out.init:
        _check_ground_atom(out, atom, ":init")
    for lit in out.goal:
        _check_ground_atom(out, lit.atom, ":goal")
    return out


def _check_ground_atom(lifted: LiftedTask, atom: Atom, where: str) -> None:
    if atom.predicate not in lifted.predicates:
        raise PddlError(f"unknown predicate {atom.predicate} in {where}")
    want = len(lifted.predicates[atom.predicate])
    if len(atom.args) != want:
        raise PddlError(f"arity mismatch for {atom.predicate} in {where}")
    for arg in atom.args:
        if arg not in lifted.objects:
            raise PddlError(f"unknown object {arg} in {where}")


def load_task(domain_text: str, problem_text: str) -> LiftedTask:
    """Parse a domain/problem pair into a lifted task."""
    return parse_problem(problem_text, parse_domain(domain_text))


# ---------------------------------------------------------------------------
# Pretty printer (canonical form)
# ---------------------------------------------------------------------------

def pretty_domain(lifted: LiftedTask) -> str:
    lines = [f"(define (domain {lifted.domain_name})"]
    lines.append("  (:requirements :strips :typing :negative-preconditions)")
    types = sorted((t, p) for t, p in lifted.types.items() if t != "object")
    if types:
        decls = " ".join(f"{t} - {p or 'object'}" for t, p in types)
        lines.append(f"  (:types {decls})")
    if lifted.constants:
        decls = " ".join(f"{o} - {t}" for o, t in sorted(lifted.constants.items()))
        lines.append(f"  (:constants {decls})")
    preds = " ".join(
        Atom(p, tuple(f"?x{i} - {t}" for i, t in enumerate(ts))).render()
        for p, ts in sorted(lifted.predicates.items())
    )
    lines.append(f"  (:predicates {preds})")
    for s in lifted.schemas:
        params = " ".join(f"{v} - {t}" for v, t in s.params)
        pre = " ".join(l.render() for l in s.pre)
        eff = " ".join([a.render() for a in s.add] + [f"(not {d.render()})" for d in s.del_])
        lines.append(f"  (:action {s.name}")
        lines.append(f"    :parameters ({params})")
        lines.append(f"    :precondition (and {pre})")
        if s.cost != 1:
            lines.append(f"    :cost {s.cost}")
        lines.append(f"    :effect (and {eff}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def pretty_problem(lifted: LiftedTask) -> str:
    lines = [f"(define (problem {lifted.problem_name or 'problem'})"]
    lines.append(f"  (:domain {lifted.domain_name})")
    objs = {o: t for o, t in lifted.objects.items() if o not in lifted.constants}
    if objs:
        decls = " ".join(f"{o} - {t}" for o, t in sorted(objs.items()))
        lines.append(f"  (:objects {decls})")
    init = " ".join(sorted(a.render() for a in lifted.init))
    lines.append(f"  (:init {init})")
    goal = " ".join(l.render() for l in lifted.goal)
    lines.append(f"  (:goal (and {goal}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------

DEFAULT_GROUND_CAP = 2_000_000


def ground(lifted: LiftedTask, cap: int = DEFAULT_GROUND_CAP, name: str = "") -> PlanningTask:
    """Instantiate schemas over typed objects and prune by relaxed reachability.

    Fact and action tables are ordered lexicographically by name, which is the
    repo-wide tie-breaking order.
    """
    down = lifted.subtypes()
    objs_by_type: Dict[str, List[str]] = {}
    for tname in lifted.types:
        compat = down.get(tname, {tname})
        objs_by_type[tname] = sorted(o for o, t in lifted.objects.items() if t in compat)

    insts = []  # (name, pre_literals, add_atoms, del_atoms, cost)
    count = 0
    for schema in lifted.schemas:
        domains = []
        for _, tname in schema.params:
            domains.append(objs_by_type.get(tname, []))
        for binding in itertools.product(*domains):
            count += 1
            if count > cap:
                raise GroundingError(
                    f"grounding exceeds size cap of {cap} instantiations")
            env = {var: obj for (var, _), obj in zip(schema.params, binding)}
            pre = []
            feasible = True
            for l in schema.pre:
                if l.atom.predicate == "=":
                    lhs, rhs = (env.get(a, a) for a in l.atom.args)
                    if (lhs == rhs) != l.positive:
                        feasible = False
                        break
                    continue  # statically true, drop from the grounded pre
                pre.append(Literal(_ground_atom(l.atom, env), l.positive))
            if not feasible:
                continue
            gname = _ground_name(schema.name, binding)
            add = [_ground_atom(a, env) for a in schema.add]
            dele = [_ground_atom(a, env) for a in schema.del_]
            insts.append((gname, pre, add, dele, schema.cost))

    init_atoms = {a.render() for a in lifted.init}
    goal_lits = [Literal(l.atom.render(), l.positive) for l in lifted.goal]

    surviving = _relaxed_prune(insts, init_atoms)

    mentioned = set(init_atoms)
    mentioned.update(l.atom for l in goal_lits)
    for gname, pre, add, dele, cost in surviving:
        mentioned.update(l.atom for l in pre)
        mentioned.update(add)
        mentioned.update(dele)

    names = [row[0] for row in surviving]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise GroundingError(
            f"ambiguous grounded actions (same name survives twice): {dupes[:3]}")

    return build_task(mentioned, surviving, init_atoms, goal_lits,
                      name=name or f"{lifted.domain_name}:{lifted.problem_name}")


def _ground_name(schema: str, binding: Tuple[str, ...]) -> str:
    if binding:
        return f"({schema} {' '.join(binding)})"
    return f"({schema})"


def _ground_atom(atom: Atom, env: Dict[str, str]) -> str:
    args = tuple(env.get(a, a) for a in atom.args)
    return Atom(atom.predicate, args).render()


def _relaxed_prune(insts, init_atoms):
    """Keep instances whose preconditions are relaxed-reachable from init.

    Negative preconditions are tracked through negation facts: (not p) is
    initially reachable unless p holds, and becomes reachable when any kept
    action deletes p.
    """
    reachable = set(init_atoms)
    neg_reachable = set()  # atoms whose negation is reachable
    mentioned_atoms = set(init_atoms)
    for _, pre, add, dele, _ in insts:
        mentioned_atoms.update(l.atom for l in pre)
        mentioned_atoms.update(add)
        mentioned_atoms.update(dele)
    neg_reachable.update(a for a in mentioned_atoms if a not in init_atoms)

    pending = list(insts)
    kept = []
    changed = True
    while changed:
        changed = False
        still = []
        for row in pending:
            _, pre, add, dele, _ = row
            ok = all(
                (l.atom in reachable) if l.positive else (l.atom in neg_reachable)
                for l in pre
            )
            if ok:
                kept.append(row)
                for a in add:
                    if a not in reachable:
                        reachable.add(a)
                        changed = True
                for d in dele:
                    if d not in neg_reachable:
                        neg_reachable.add(d)
                        changed = True
            else:
                still.append(row)
        pending = still
    kept.sort(key=lambda row: row[0])
    return kept
