"""Lattices used to unify node predicates across aligned examples.

Three families:

* ``Const`` -- flat lattice over one attribute value. Two different values
  generalize to top.
* ``Affix`` -- string patterns ``prefix*suffix``; the join keeps the longest
  common prefix and suffix of the operands. A full-match value is kept as
  ``exact`` until it meets a different string.
* ``LabelSet`` -- sets of control labels ordered by reverse inclusion; the
  join is set intersection and the empty set is the top element.

Bottom encodes "attribute absent on the node". Joining an absent attribute
with a concrete one yields top, so a merged predicate never asserts more
than every contributing node satisfies. (A true identity-bottom only occurs
for nodes missing from one merge side, and those never reach a formula.)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .analysis import compute_output_ignored, compute_trans_control_dep
from .pdg import Node, NodeKind, Pdg

_BOT = "bot"
_EXACT = "exact"
_PATTERN = "pattern"
_TOP = "top"
_SET = "set"


@dataclass(frozen=True)
class Const:
    tag: str
    value: object = None

    @classmethod
    def bot(cls) -> "Const":
        return cls(_BOT)

    @classmethod
    def top(cls) -> "Const":
        return cls(_TOP)

    @classmethod
    def exactly(cls, value) -> "Const":
        return cls(_EXACT, value)

    @classmethod
    def from_value(cls, value) -> "Const":
        return cls.bot() if value is None else cls.exactly(value)

    def is_trivial(self) -> bool:
        return self.tag in (_BOT, _TOP)

    def join(self, other: "Const") -> "Const":
        if self.tag == _TOP or other.tag == _TOP:
            return Const.top()
        if self.tag == _BOT and other.tag == _BOT:
            return Const.bot()
        if self.tag == _BOT or other.tag == _BOT:
            return Const.top()
        return self if self.value == other.value else Const.top()

    def satisfied_by(self, actual) -> bool:
        if self.is_trivial():
            return True
        return actual is not None and actual == self.value


@dataclass(frozen=True)
class Affix:
    tag: str
    prefix: str = ""
    suffix: str = ""

    @classmethod
    def bot(cls) -> "Affix":
        return cls(_BOT)

    @classmethod
    def top(cls) -> "Affix":
        return cls(_TOP)

    @classmethod
    def exactly(cls, s: str) -> "Affix":
        return cls(_EXACT, s, "")

    @classmethod
    def pattern(cls, prefix: str, suffix: str) -> "Affix":
        if not prefix and not suffix:
            return cls.top()
        return cls(_PATTERN, prefix, suffix)

    @classmethod
    def from_value(cls, value: Optional[str]) -> "Affix":
        return cls.bot() if value is None else cls.exactly(value)

    def is_trivial(self) -> bool:
        return self.tag in (_BOT, _TOP)

    def join(self, other: "Affix") -> "Affix":
        if self.tag == _TOP or other.tag == _TOP:
            return Affix.top()
        if self.tag == _BOT and other.tag == _BOT:
            return Affix.bot()
        if self.tag == _BOT or other.tag == _BOT:
            return Affix.top()
        if self.tag == _EXACT and other.tag == _EXACT \
                and self.prefix == other.prefix:
            return self
        p = _common_prefix(self._denoted_prefix(), other._denoted_prefix())
        s = _common_suffix(self._denoted_suffix(), other._denoted_suffix())
        return Affix.pattern(p, s)

    def _denoted_prefix(self) -> str:
        return self.prefix

    def _denoted_suffix(self) -> str:
        return self.prefix if self.tag == _EXACT else self.suffix

    def satisfied_by(self, actual: Optional[str]) -> bool:
        if self.is_trivial():
            return True
        if actual is None:
            return False
        if self.tag == _EXACT:
            return actual == self.prefix
        return actual.startswith(self.prefix) and actual.endswith(self.suffix)

    def render(self) -> str:
        if self.tag == _EXACT:
            return self.prefix
        return f"{self.prefix}*{self.suffix}"


def _common_prefix(a: str, b: str) -> str:
    n = min(len(a), len(b))
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return a[:i]


def _common_suffix(a: str, b: str) -> str:
    n = min(len(a), len(b))
    i = 0
    while i < n and a[len(a) - 1 - i] == b[len(b) - 1 - i]:
        i += 1
    return a[len(a) - i:] if i else ""


@dataclass(frozen=True)
class LabelSet:
    tag: str
    labels: frozenset = frozenset()

    @classmethod
    def bot(cls) -> "LabelSet":
        return cls(_BOT)

    @classmethod
    def of(cls, labels) -> "LabelSet":
        return cls(_SET, frozenset(labels))

    @classmethod
    def top(cls) -> "LabelSet":
        return cls.of(())

    @classmethod
    def from_value(cls, labels) -> "LabelSet":
        return cls.bot() if labels is None else cls.of(labels)

    def is_trivial(self) -> bool:
        return self.tag == _BOT or (self.tag == _SET and not self.labels)

    def join(self, other: "LabelSet") -> "LabelSet":
        if self.tag == _BOT and other.tag == _BOT:
            return LabelSet.bot()
        if self.tag == _BOT or other.tag == _BOT:
            return LabelSet.top()
        return LabelSet.of(self.labels & other.labels)

    def satisfied_by(self, actual) -> bool:
        if self.tag == _BOT:
            return True
        return self.labels <= frozenset(actual if actual is not None else ())


@dataclass(frozen=True)
class NodePredicates:
    label: Const
    data_type: Affix
    data_value: Const
    num_para: Const
    declaring_type: Affix
    trans_control_dep: LabelSet
    output_ignored: Const

    @classmethod
    def from_node(cls, g: Pdg, node: Node) -> "NodePredicates":
        if node.kind is NodeKind.ACTION:
            ignored = compute_output_ignored(g, node.id)
        else:
            ignored = None
        return cls(
            label=Const.from_value(node.label),
            data_type=Affix.from_value(node.data_type),
            data_value=Const.from_value(node.data_value),
            num_para=Const.from_value(node.num_para),
            declaring_type=Affix.from_value(node.declaring_type),
            trans_control_dep=LabelSet.of(compute_trans_control_dep(g, node.id)),
            output_ignored=Const.from_value(ignored),
        )

    @classmethod
    def trivial(cls) -> "NodePredicates":
        return cls(Const.bot(), Affix.bot(), Const.bot(), Const.bot(),
                   Affix.bot(), LabelSet.bot(), Const.bot())

    def join(self, other: "NodePredicates") -> "NodePredicates":
        return NodePredicates(
            label=self.label.join(other.label),
            data_type=self.data_type.join(other.data_type),
            data_value=self.data_value.join(other.data_value),
            num_para=self.num_para.join(other.num_para),
            declaring_type=self.declaring_type.join(other.declaring_type),
            trans_control_dep=self.trans_control_dep.join(other.trans_control_dep),
            output_ignored=self.output_ignored.join(other.output_ignored),
        )

    def is_trivial(self) -> bool:
        return all(f.is_trivial() for f in (
            self.label, self.data_type, self.data_value, self.num_para,
            self.declaring_type, self.trans_control_dep, self.output_ignored))


def satisfies(g: Pdg, node: Node, preds: NodePredicates) -> bool:
    """Check one concrete node against a predicate bundle.

    Top imposes nothing. Bottom is vacuous as well: it only records that no
    merged input carried the attribute, which constrains nothing.
    """
    if not preds.label.satisfied_by(node.label):
        return False
    if not preds.data_type.satisfied_by(node.data_type):
        return False
    if not preds.data_value.satisfied_by(node.data_value):
        return False
    if not preds.num_para.satisfied_by(node.num_para):
        return False
    if not preds.declaring_type.satisfied_by(node.declaring_type):
        return False
    if not preds.trans_control_dep.satisfied_by(
            compute_trans_control_dep(g, node.id)):
        return False
    if not preds.output_ignored.is_trivial():
        if node.kind is not NodeKind.ACTION:
            return False
        if not preds.output_ignored.satisfied_by(
                compute_output_ignored(g, node.id)):
            return False
    return True


def join(a: NodePredicates, b: NodePredicates) -> NodePredicates:
    return a.join(b)


# Serialized predicate objects use one string per non-bottom field:
#   "*"            top
#   "exact:v"      exact value (num-para integer, output-ignored true/false)
#   "affix:p*s"    prefix/suffix pattern
#   "subset:[a,b]" label-set bound

_CONST_FIELDS = {"label": str, "dataValue": str, "numPara": int,
                 "outputIgnored": bool}
_AFFIX_FIELDS = ("dataType", "declaringType")

_FIELD_ATTR = {"label": "label", "dataType": "data_type",
               "dataValue": "data_value", "numPara": "num_para",
               "declaringType": "declaring_type",
               "transControlDep": "trans_control_dep",
               "outputIgnored": "output_ignored"}


class PredicateFormatError(ValueError):
    pass


def _render_const(c: Const):
    if c.tag == _BOT:
        return None
    if c.tag == _TOP:
        return "*"
    v = c.value
    if isinstance(v, bool):
        v = "true" if v else "false"
    return f"exact:{v}"


def _render_affix(a: Affix):
    if a.tag == _BOT:
        return None
    if a.tag == _TOP:
        return "*"
    if a.tag == _EXACT:
        return f"exact:{a.prefix}"
    return f"affix:{a.prefix}*{a.suffix}"


def _render_labelset(s: LabelSet):
    if s.tag == _BOT:
        return None
    return "subset:[" + ",".join(sorted(s.labels)) + "]"


def predicates_to_obj(p: NodePredicates) -> dict:
    obj = {}
    for key, value in (("label", _render_const(p.label)),
                       ("dataType", _render_affix(p.data_type)),
                       ("dataValue", _render_const(p.data_value)),
                       ("numPara", _render_const(p.num_para)),
                       ("declaringType", _render_affix(p.declaring_type)),
                       ("transControlDep", _render_labelset(p.trans_control_dep)),
                       ("outputIgnored", _render_const(p.output_ignored))):
        if value is not None:
            obj[key] = value
    return obj


def _parse_const(field: str, text: str) -> Const:
    if text == "*":
        return Const.top()
    if not text.startswith("exact:"):
        raise PredicateFormatError(f"{field}: expected 'exact:' or '*', got {text!r}")
    raw = text[len("exact:"):]
    want = _CONST_FIELDS[field]
    if want is int:
        try:
            return Const.exactly(int(raw))
        except ValueError:
            raise PredicateFormatError(f"{field}: not an integer: {raw!r}") from None
    if want is bool:
        if raw not in ("true", "false"):
            raise PredicateFormatError(f"{field}: expected true/false, got {raw!r}")
        return Const.exactly(raw == "true")
    return Const.exactly(raw)


def _parse_affix(field: str, text: str) -> Affix:
    if text == "*":
        return Affix.top()
    if text.startswith("exact:"):
        return Affix.exactly(text[len("exact:"):])
    if text.startswith("affix:"):
        body = text[len("affix:"):]
        if "*" not in body:
            raise PredicateFormatError(f"{field}: affix needs a '*': {text!r}")
        prefix, _, suffix = body.partition("*")
        return Affix.pattern(prefix, suffix)
    raise PredicateFormatError(f"{field}: bad affix encoding {text!r}")


def _parse_labelset(field: str, text: str) -> LabelSet:
    if text == "*":
        return LabelSet.top()
    if not (text.startswith("subset:[") and text.endswith("]")):
        raise PredicateFormatError(f"{field}: bad label-set encoding {text!r}")
    body = text[len("subset:["):-1]
    labels = [p for p in body.split(",") if p]
    return LabelSet.of(labels)


def predicates_from_obj(obj: dict) -> NodePredicates:
    fields = {"label": Const.bot(), "data_type": Affix.bot(),
              "data_value": Const.bot(), "num_para": Const.bot(),
              "declaring_type": Affix.bot(),
              "trans_control_dep": LabelSet.bot(),
              "output_ignored": Const.bot()}
    for key, text in obj.items():
        if key not in _FIELD_ATTR:
            raise PredicateFormatError(f"unknown predicate field {key!r}")
        if not isinstance(text, str):
            raise PredicateFormatError(f"{key}: expected a string encoding")
        if key in _CONST_FIELDS:
            fields[_FIELD_ATTR[key]] = _parse_const(key, text)
        elif key in _AFFIX_FIELDS:
            fields[_FIELD_ATTR[key]] = _parse_affix(key, text)
        else:
            fields[_FIELD_ATTR[key]] = _parse_labelset(key, text)
    return NodePredicates(**fields)
