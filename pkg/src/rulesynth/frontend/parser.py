"""Parser for the mini method-body language (``.mj`` files).

The grammar is documented in docs/grammar.md. A file holds exactly one
method body; the method name comes from the file stem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional


@dataclass(frozen=True)
class MethodSource:
    name: str
    body: str


@dataclass(frozen=True)
class CodeChange:
    before: MethodSource
    after: MethodSource


class ParseError(ValueError):
    def __init__(self, message, line, col):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


# --- AST -----------------------------------------------------------------

@dataclass
class Literal:
    kind: str  # int | string | boolean | null
    text: str


@dataclass
class Name:
    ident: str


@dataclass
class Unary:
    op: str
    operand: object


@dataclass
class Binary:
    op: str
    left: object
    right: object


@dataclass
class Call:
    receiver: Optional[object]  # None for a bare call
    name: str
    args: List[object]


@dataclass
class New:
    type_name: str
    args: List[object]


@dataclass
class Decl:
    type_name: str
    name: str
    init: Optional[object]


@dataclass
class Assign:
    name: str
    expr: object


@dataclass
class ExprStmt:
    expr: object


@dataclass
class If:
    cond: object
    then_body: list
    else_body: Optional[list]


@dataclass
class While:
    cond: object
    body: list


@dataclass
class DoWhile:
    body: list
    cond: object


@dataclass
class For:
    init: Optional[object]
    cond: Optional[object]
    update: Optional[object]
    body: list


@dataclass
class Return:
    expr: Optional[object]


@dataclass
class Try:
    body: list
    catch_type: str
    catch_name: str
    catch_body: list


# --- Lexer ---------------------------------------------------------------

_KEYWORDS = {"if", "else", "while", "do", "for", "return", "try", "catch",
             "new", "true", "false", "null"}

_PUNCT = ["&&", "||", "==", "!=", "<=", ">=", "->",
          "(", ")", "{", "}", ";", ",", ".", "=", "!", "<", ">",
          "+", "-", "*", "/", "%"]


@dataclass
class Token:
    kind: str  # ident | keyword | int | string | punct | eof
    text: str
    line: int
    col: int


def _tokenize(src: str) -> List[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n and src[j] != '"':
                if src[j] == "\n":
                    raise ParseError("unterminated string literal", line, col)
                j += 1
            if j >= n:
                raise ParseError("unterminated string literal", line, col)
            tokens.append(Token("string", src[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            tokens.append(Token("int", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            text = src[i:j]
            kind = "keyword" if text in _KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
            col += j - i
            i = j
            continue
        for punct in _PUNCT:
            if src.startswith(punct, i):
                tokens.append(Token("punct", punct, line, col))
                col += len(punct)
                i += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


# --- Parser --------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect(self, kind, text=None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            got = tok.text if tok.text else tok.kind
            self.fail(f"expected {want!r}, got {got!r}")
        return self.advance()

    def at(self, kind, text=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def parse_body(self) -> list:
        stmts = []
        while not self.at("eof"):
            stmts.append(self.statement())
        return stmts

    def statement(self):
        if self.at("punct", "{"):
            self.fail("stray block; blocks belong to control statements")
        if self.at("keyword", "if"):
            return self.if_statement()
        if self.at("keyword", "while"):
            self.advance()
            self.expect("punct", "(")
            cond = self.expression()
            self.expect("punct", ")")
            return While(cond, self.block())
        if self.at("keyword", "do"):
            self.advance()
            body = self.block()
            self.expect("keyword", "while")
            self.expect("punct", "(")
            cond = self.expression()
            self.expect("punct", ")")
            self.expect("punct", ";")
            return DoWhile(body, cond)
        if self.at("keyword", "for"):
            return self.for_statement()
        if self.at("keyword", "return"):
            self.advance()
            expr = None
            if not self.at("punct", ";"):
                expr = self.expression()
            self.expect("punct", ";")
            return Return(expr)
        if self.at("keyword", "try"):
            self.advance()
            body = self.block()
            self.expect("keyword", "catch")
            self.expect("punct", "(")
            ctype = self.type_name()
            cname = self.expect("ident").text
            self.expect("punct", ")")
            catch_body = self.block()
            return Try(body, ctype, cname, catch_body)
        return self.simple_statement(require_semi=True)

    def if_statement(self):
        self.expect("keyword", "if")
        self.expect("punct", "(")
        cond = self.expression()
        self.expect("punct", ")")
        then_body = self.block()
        else_body = None
        if self.at("keyword", "else"):
            self.advance()
            if self.at("keyword", "if"):
                else_body = [self.if_statement()]
            else:
                else_body = self.block()
        return If(cond, then_body, else_body)

    def for_statement(self):
        self.expect("keyword", "for")
        self.expect("punct", "(")
        init = None
        if not self.at("punct", ";"):
            init = self.simple_statement(require_semi=False)
        self.expect("punct", ";")
        cond = None
        if not self.at("punct", ";"):
            cond = self.expression()
        self.expect("punct", ";")
        update = None
        if not self.at("punct", ")"):
            update = self.simple_statement(require_semi=False)
        self.expect("punct", ")")
        return For(init, cond, update, self.block())

    def block(self) -> list:
        if self.at("punct", "{"):
            self.advance()
            stmts = []
            while not self.at("punct", "}"):
                if self.at("eof"):
                    self.fail("unterminated block")
                stmts.append(self.statement())
            self.advance()
            return stmts
        return [self.statement()]

    def simple_statement(self, require_semi):
        # declaration: IDENT IDENT [= expr]
        if self.at("ident") and self.peek(1).kind == "ident":
            type_name = self.type_name()
            name = self.expect("ident").text
            init = None
            if self.at("punct", "="):
                self.advance()
                init = self.expression()
            if require_semi:
                self.expect("punct", ";")
            return Decl(type_name, name, init)
        if self.at("ident") and self.peek(1).kind == "punct" \
                and self.peek(1).text == "<" and self.peek(2).kind == "ident" \
                and self.peek(3).kind == "punct" \
                and self.peek(3).text in (">", ","):
            self.fail("generic type syntax is not supported")
        # assignment: IDENT = expr
        if self.at("ident") and self.peek(1).kind == "punct" \
                and self.peek(1).text == "=":
            name = self.advance().text
            self.advance()
            expr = self.expression()
            if require_semi:
                self.expect("punct", ";")
            return Assign(name, expr)
        expr = self.expression()
        if self.at("punct", "="):
            self.fail("assignment target must be a simple variable")
        if require_semi:
            self.expect("punct", ";")
        return ExprStmt(expr)

    def type_name(self) -> str:
        return self.expect("ident").text

    # expression precedence: || < && < relational < additive
    #                        < multiplicative < unary < postfix
    def expression(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.at("punct", "||"):
            self.advance()
            left = Binary("||", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.rel_expr()
        while self.at("punct", "&&"):
            self.advance()
            left = Binary("&&", left, self.rel_expr())
        return left

    def rel_expr(self):
        left = self.add_expr()
        while self.peek().kind == "punct" and \
                self.peek().text in ("==", "!=", "<", "<=", ">", ">="):
            op = self.advance().text
            left = Binary(op, left, self.add_expr())
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.peek().kind == "punct" and self.peek().text in ("+", "-"):
            op = self.advance().text
            left = Binary(op, left, self.mul_expr())
        return left

    def mul_expr(self):
        left = self.unary_expr()
        while self.peek().kind == "punct" and \
                self.peek().text in ("*", "/", "%"):
            op = self.advance().text
            left = Binary(op, left, self.unary_expr())
        return left

    def unary_expr(self):
        if self.at("punct", "!"):
            self.advance()
            return Unary("!", self.unary_expr())
        if self.at("punct", "-") and self.peek(1).kind == "int":
            self.advance()
            tok = self.advance()
            return Literal("int", "-" + tok.text)
        return self.postfix_expr()

    def postfix_expr(self):
        expr = self.primary()
        while self.at("punct", "."):
            self.advance()
            name = self.expect("ident").text
            if not self.at("punct", "("):
                self.fail("field access is not supported; "
                          "only method calls may follow '.'")
            expr = Call(expr, name, self.arguments())
        return expr

    def arguments(self) -> list:
        self.expect("punct", "(")
        args = []
        if not self.at("punct", ")"):
            args.append(self.expression())
            while self.at("punct", ","):
                self.advance()
                args.append(self.expression())
        self.expect("punct", ")")
        return args

    def primary(self):
        if self.at("punct", "->") or self.at("punct", "-"):
            self.fail("unsupported expression syntax")
        if self.at("keyword", "new"):
            self.advance()
            type_name = self.type_name()
            return New(type_name, self.arguments())
        if self.at("keyword", "true") or self.at("keyword", "false"):
            tok = self.advance()
            return Literal("boolean", tok.text)
        if self.at("keyword", "null"):
            self.advance()
            return Literal("null", "null")
        if self.at("int"):
            return Literal("int", self.advance().text)
        if self.at("string"):
            return Literal("string", self.advance().text)
        if self.at("punct", "("):
            self.advance()
            expr = self.expression()
            self.expect("punct", ")")
            return expr
        if self.at("ident"):
            name = self.advance().text
            if self.at("punct", "("):
                return Call(None, name, self.arguments())
            return Name(name)
        got = self.peek().text or self.peek().kind
        self.fail(f"unexpected token {got!r} in expression")


def parse_method(source: MethodSource) -> list:
    """Parse a method body into a statement list."""
    return _Parser(_tokenize(source.body)).parse_body()
