"""Build normalized PDGs from parsed method bodies.

Encoding rules:

* one data node per SSA value and per literal occurrence; assignments mint
  a fresh value node, loops carry no phi nodes
* one action node per call, constructor, operator, branch (``IF``/``LOOP``),
  catch handler (``CATCH``) and ``return``
* ``recv``/``para_i``/``def`` wire dataflow; a guard value reaches its
  branch node over ``cond``; a branch reaches every directly
  control-dependent action over ``dep``; calls inside a ``try`` reach the
  handler over ``throw``
* an uppercase receiver that was never declared is a static call and sets
  ``declaring_type``; a call statement whose value is unused produces no
  result node at all

After construction, relational-operator labels are collapsed to
``<rel_op>`` and repeated getter calls on one receiver are merged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..pdg import (COND, DEF, DEP, PARA, RECV, THROW, ChangeTag, Edge,
                   EdgeLabel, Node, NodeKind, Origin, Pdg, validate)
from . import parser as ast
from .parser import MethodSource, ParseError

_REL_OPS = ("<", "<=", ">", ">=", "==", "!=")
REL_OP_LABEL = "<rel_op>"
_BOOL_OPS = _REL_OPS + ("&&", "||", "!")
_GETTER_PREFIXES = ("get", "is", "has")


class BuildError(ValueError):
    pass


@dataclass
class _NodeDraft:
    id: str
    kind: NodeKind
    label: Optional[str] = None
    data_type: Optional[str] = None
    data_value: Optional[str] = None
    num_para: Optional[int] = None
    declaring_type: Optional[str] = None

    def freeze(self) -> Node:
        return Node(self.id, self.kind, self.label, self.data_type,
                    self.data_value, self.num_para, self.declaring_type,
                    ChangeTag.NONE)


class _Builder:
    def __init__(self, name):
        self.name = name
        self.nodes = []
        self.edges = []
        self.edge_keys = set()
        self.env = {}            # variable name -> current value node id
        self.declared_type = {}  # variable name -> declared type string
        self.control = None      # current dep parent (action node id)
        self.catches = []        # stack of enclosing catch node ids

    def new_node(self, kind, **attrs) -> str:
        draft = _NodeDraft(id=f"n{len(self.nodes)}", kind=kind, **attrs)
        self.nodes.append(draft)
        return draft.id

    def add_edge(self, src, dst, label):
        key = (src, dst, label)
        if key not in self.edge_keys:
            self.edge_keys.add(key)
            self.edges.append(Edge(src, dst, label))

    def new_action(self, label, num_para=None, declaring_type=None) -> str:
        nid = self.new_node(NodeKind.ACTION, label=label, num_para=num_para,
                            declaring_type=declaring_type)
        if self.control is not None:
            self.add_edge(self.control, nid, DEP)
        return nid

    # --- expressions ------------------------------------------------------

    def rvalue(self, expr, result_type=None, want_result=True):
        """Evaluate an expression; return the id of its value node, or None
        when the expression is a call whose result is not wanted."""
        if isinstance(expr, ast.Literal):
            data_type = result_type
            if data_type is None and expr.kind != "null":
                data_type = expr.kind if expr.kind != "string" else "String"
            return self.new_node(NodeKind.DATA, data_type=data_type,
                                 data_value=expr.text)
        if isinstance(expr, ast.Name):
            nid = self.lookup(expr.ident)
            if result_type is not None:
                draft = self.nodes[int(nid[1:])]
                if draft.data_type is None:
                    draft.data_type = result_type
            return nid
        if isinstance(expr, ast.Unary):
            operand = self.rvalue(expr.operand)
            op = self.new_action(expr.op)
            self.add_edge(operand, op, PARA(0))
            if not want_result:
                return None
            result = self.new_node(NodeKind.DATA,
                                   data_type=result_type or "boolean")
            self.add_edge(op, result, DEF)
            return result
        if isinstance(expr, ast.Binary):
            left = self.rvalue(expr.left)
            right = self.rvalue(expr.right)
            op = self.new_action(expr.op)
            self.add_edge(left, op, PARA(0))
            self.add_edge(right, op, PARA(1))
            if not want_result:
                return None
            default = "boolean" if expr.op in _BOOL_OPS else None
            result = self.new_node(NodeKind.DATA,
                                   data_type=result_type or default)
            self.add_edge(op, result, DEF)
            return result
        if isinstance(expr, ast.Call):
            return self.call(expr, result_type, want_result)
        if isinstance(expr, ast.New):
            args = [self.rvalue(a) for a in expr.args]
            action = self.new_action(expr.type_name, num_para=len(args),
                                     declaring_type=expr.type_name)
            for i, arg in enumerate(args):
                self.add_edge(arg, action, PARA(i))
            self.throw_edge(action)
            if not want_result:
                return None
            result = self.new_node(NodeKind.DATA,
                                   data_type=result_type or expr.type_name)
            self.add_edge(action, result, DEF)
            return result
        raise BuildError(f"unsupported expression {type(expr).__name__}")

    def call(self, expr, result_type, want_result):
        receiver = None
        declaring_type = None
        if expr.receiver is not None:
            if isinstance(expr.receiver, ast.Name):
                name = expr.receiver.ident
                if name in self.env:
                    receiver = self.env[name]
                elif name[:1].isupper():
                    declaring_type = name
                else:
                    receiver = self.lookup(name)
            else:
                receiver = self.rvalue(expr.receiver)
        args = [self.rvalue(a) for a in expr.args]
        action = self.new_action(expr.name, num_para=len(args),
                                 declaring_type=declaring_type)
        if receiver is not None:
            self.add_edge(receiver, action, RECV)
        for i, arg in enumerate(args):
            self.add_edge(arg, action, PARA(i))
        self.throw_edge(action)
        if not want_result:
            return None
        result = self.new_node(NodeKind.DATA, data_type=result_type)
        self.add_edge(action, result, DEF)
        return result

    def throw_edge(self, action_id):
        if self.catches:
            self.add_edge(action_id, self.catches[-1], THROW)

    def lookup(self, name) -> str:
        if name not in self.env:
            # a value defined outside the method body (field, parameter)
            self.env[name] = self.new_node(NodeKind.DATA)
        return self.env[name]

    # --- statements -------------------------------------------------------

    def run(self, statements):
        for stmt in statements:
            self.statement(stmt)

    def statement(self, stmt):
        if isinstance(stmt, ast.Decl):
            self.declared_type[stmt.name] = stmt.type_name
            if stmt.init is None:
                self.env[stmt.name] = self.new_node(
                    NodeKind.DATA, data_type=stmt.type_name)
            else:
                self.env[stmt.name] = self.rvalue(
                    stmt.init, result_type=stmt.type_name)
            return
        if isinstance(stmt, ast.Assign):
            declared = self.declared_type.get(stmt.name)
            # an alias RHS hands over its existing node; anything else
            # mints a fresh SSA value
            self.env[stmt.name] = self.rvalue(stmt.expr, result_type=declared)
            return
        if isinstance(stmt, ast.ExprStmt):
            self.rvalue(stmt.expr, want_result=False)
            return
        if isinstance(stmt, ast.If):
            guard = self.rvalue(stmt.cond)
            branch = self.new_action("IF")
            self.add_edge(guard, branch, COND)
            self.in_control(branch, stmt.then_body)
            if stmt.else_body is not None:
                self.in_control(branch, stmt.else_body)
            return
        if isinstance(stmt, ast.While):
            guard = self.rvalue(stmt.cond)
            loop = self.new_action("LOOP")
            self.add_edge(guard, loop, COND)
            self.in_control(loop, stmt.body)
            return
        if isinstance(stmt, ast.DoWhile):
            loop = self.new_action("LOOP")
            self.in_control(loop, stmt.body)
            saved = self.control
            self.control = loop  # the guard re-evaluates on every iteration
            guard = self.rvalue(stmt.cond)
            self.control = saved
            self.add_edge(guard, loop, COND)
            return
        if isinstance(stmt, ast.For):
            if stmt.init is not None:
                self.statement(stmt.init)
            guard = None
            if stmt.cond is not None:
                guard = self.rvalue(stmt.cond)
            loop = self.new_action("LOOP")
            if guard is not None:
                self.add_edge(guard, loop, COND)
            body = list(stmt.body)
            self.in_control(loop, body)
            if stmt.update is not None:
                self.in_control(loop, [stmt.update])
            return
        if isinstance(stmt, ast.Return):
            value = None
            if stmt.expr is not None:
                value = self.rvalue(stmt.expr)
            action = self.new_action("return")
            if value is not None:
                self.add_edge(value, action, PARA(0))
            return
        if isinstance(stmt, ast.Try):
            handler = self.new_action("CATCH")
            var = self.new_node(NodeKind.DATA, data_type=stmt.catch_type)
            self.add_edge(handler, var, DEF)
            self.env[stmt.catch_name] = var
            self.declared_type[stmt.catch_name] = stmt.catch_type
            self.catches.append(handler)
            try:
                self.run(stmt.body)
            finally:
                self.catches.pop()
            self.in_control(handler, stmt.catch_body)
            return
        raise BuildError(f"unsupported statement {type(stmt).__name__}")

    def in_control(self, parent, statements):
        saved = self.control
        self.control = parent
        try:
            self.run(statements)
        finally:
            self.control = saved

    def graph(self, origin=None) -> Pdg:
        return Pdg([d.freeze() for d in self.nodes], self.edges, origin)


def build_pdg(method: MethodSource, origin_file=None) -> Pdg:
    """Parse, encode and normalize one method."""
    statements = ast.parse_method(method)
    builder = _Builder(method.name)
    builder.run(statements)
    g = builder.graph(Origin(file=origin_file, method=method.name, line=1))
    g = normalize_relops(g)
    g = dedup_getters(g)
    problems = validate(g)
    if problems:
        raise BuildError(f"internal error, built an invalid graph: "
                         f"{'; '.join(problems)}")
    return g


def normalize_relops(g: Pdg) -> Pdg:
    """Collapse relational-operator labels to a shared ``<rel_op>`` label."""
    nodes = [n.with_label(REL_OP_LABEL)
             if n.kind is NodeKind.ACTION and n.label in _REL_OPS else n
             for n in g.nodes]
    return Pdg(nodes, g.edges, g.origin)


def _is_getter(node: Node) -> bool:
    return (node.kind is NodeKind.ACTION and node.num_para == 0
            and node.label is not None
            and node.label.startswith(_GETTER_PREFIXES))


def dedup_getters(g: Pdg) -> Pdg:
    """Merge repeated zero-argument getter calls on one receiver into a
    single call; every use of a removed call's result moves to the
    surviving call's result."""
    groups = {}
    receiver_of = {}
    for e in g.edges:
        if e.label.kind == "recv":
            receiver_of[e.dst] = e.src
    for n in g.nodes:
        if _is_getter(n) and n.id in receiver_of:
            groups.setdefault((n.label, receiver_of[n.id]), []).append(n.id)

    drop_nodes = set()
    redirect = {}  # removed result node -> surviving result node
    for (_, _), members in sorted(groups.items()):
        if len(members) < 2:
            continue
        survivor, rest = members[0], members[1:]
        def_target = {}
        for e in g.edges:
            if e.label.kind == "def" and e.src in members:
                def_target[e.src] = e.dst
        surviving_result = def_target.get(survivor)
        for removed in rest:
            drop_nodes.add(removed)
            result = def_target.get(removed)
            if result is None:
                continue
            if surviving_result is None:
                # adopt the first available result for the surviving call
                surviving_result = result
                redirect[("def-src", removed)] = survivor
            else:
                drop_nodes.add(result)
                redirect[result] = surviving_result

    if not drop_nodes and not redirect:
        return g

    nodes = [n for n in g.nodes if n.id not in drop_nodes]
    edges = []
    seen = set()
    for e in g.edges:
        src, dst = e.src, e.dst
        if e.label.kind == "def" and ("def-src", src) in redirect:
            src = redirect[("def-src", src)]
        if src in drop_nodes or dst in drop_nodes:
            continue
        src = redirect.get(src, src)
        dst = redirect.get(dst, dst)
        key = (src, dst, e.label)
        if key in seen:
            continue
        seen.add(key)
        edges.append(Edge(src, dst, e.label))
    return Pdg(nodes, edges, g.origin)
