"""Recursive-descent parser for a Java method-declaration subset.

Supported: modifiers, primitive/qualified types, parameters; local variable
declarations, assignment (``=``, ``+=``, ``-=``), expression statements,
``return``, ``if``/``else``, ``while``, classic ``for``, blocks; literals,
names, field access, method calls, ``new`` with arguments, the binary
operators ``+ - * / % == != < > <= >= && ||``, unary ``! -``, ``++``/``--``
and parentheses. Anything else raises :class:`UnsupportedConstruct`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import JavaSyntaxError, UnsupportedConstruct
from .lexer import MODIFIERS, PRIMITIVES, Token, tokenize

BINARY_KINDS = {
    "||": "BinaryOr", "&&": "BinaryAnd",
    "==": "BinaryEquals", "!=": "BinaryNotEquals",
    "<": "BinaryLess", ">": "BinaryGreater", "<=": "BinaryLessEquals",
    ">=": "BinaryGreaterEquals",
    "+": "BinaryPlus", "-": "BinaryMinus",
    "*": "BinaryTimes", "/": "BinaryDivide", "%": "BinaryRemainder",
}
_LEVELS = [("||",), ("&&",), ("==", "!="), ("<", ">", "<=", ">="), ("+", "-"), ("*", "/", "%")]
ASSIGN_KINDS = {"=": "Assign", "+=": "AssignPlus", "-=": "AssignMinus"}

TERMINAL_KINDS = frozenset({
    "Modifier", "PrimitiveType", "SimpleName", "IntegerLiteral", "DoubleLiteral",
    "StringLiteral", "CharLiteral", "BooleanLiteral", "NullLiteral", "ThisExpr", "Keyword",
})
NONTERMINAL_KINDS = frozenset({
    "MethodDeclaration", "Parameter", "ClassType", "Block", "LocalVarDecl",
    "VariableDeclarator", "ExpressionStmt", "ReturnStmt", "IfStmt", "WhileStmt", "ForStmt",
    "NameExpr", "FieldAccess", "MethodCall", "ObjectCreation", "EnclosedExpr",
    "UnaryNot", "UnaryMinus", "PreIncrement", "PreDecrement", "PostIncrement", "PostDecrement",
    *BINARY_KINDS.values(), *ASSIGN_KINDS.values(),
})
NODE_KINDS = TERMINAL_KINDS | NONTERMINAL_KINDS

_UNSUPPORTED_OPS = {
    "->": "lambda", "::": "method reference", "?": "conditional expression",
    "[": "array", "]": "array", "@": "annotation", "...": "varargs",
    "&": "bitwise operator", "|": "bitwise operator", "^": "bitwise operator",
    "~": "bitwise operator", "<<": "shift operator", ">>": "shift operator",
    ">>>": "shift operator", "*=": "compound assignment", "/=": "compound assignment",
    "%=": "compound assignment", "&=": "compound assignment", "|=": "compound assignment",
    "^=": "compound assignment", "<<=": "compound assignment", ">>=": "compound assignment",
    ">>>=": "compound assignment",
}
_UNSUPPORTED_KEYWORDS = {
    "try", "catch", "finally", "switch", "case", "default", "do", "break", "continue",
    "throw", "throws", "class", "interface", "enum", "instanceof", "assert", "super",
    "abstract", "native", "transient", "volatile", "goto", "const", "import", "package",
    "extends", "implements",
}


@dataclass(eq=False)
class Node:
    kind: str
    children: list["Node"] = field(default_factory=list)
    lexeme: str | None = None
    token: Token | None = None
    parent: "Node | None" = field(default=None, repr=False)

    @property
    def is_terminal(self) -> bool:
        return self.kind in TERMINAL_KINDS

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def terminals(self) -> list["Node"]:
        return [n for n in self.walk() if n.is_terminal]


@dataclass
class Ast:
    root: Node
    terminals: list[Node]


def _leaf(kind, tok):
    return Node(kind, lexeme=tok.text, token=tok)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text, kind=None) -> bool:
        t = self.tok
        return t.text == text and t.kind in ((kind,) if kind else ("op", "keyword"))

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return JavaSyntaxError(msg, tok.line, tok.column)

    def unsupported(self, what, tok=None):
        tok = tok or self.tok
        return UnsupportedConstruct(what, tok.line, tok.column)

    def check_supported(self, tok=None):
        tok = tok or self.tok
        if tok.kind == "op" and tok.text in _UNSUPPORTED_OPS:
            raise self.unsupported(_UNSUPPORTED_OPS[tok.text], tok)
        if tok.kind == "keyword" and tok.text in _UNSUPPORTED_KEYWORDS:
            raise self.unsupported(tok.text, tok)

    def expect(self, text):
        if not self.at(text):
            self.check_supported()
            if self.tok.kind == "eof":
                if text == "}":
                    raise self.error("unbalanced braces: missing '}'")
                raise self.error(f"expected {text!r} but reached end of input")
            raise self.error(f"expected {text!r}, found {self.tok.text!r}")
        return self.advance()

    def ident(self):
        if self.tok.kind != "ident":
            self.check_supported()
            raise self.error(f"expected identifier, found {self.tok.text!r}")
        return _leaf("SimpleName", self.advance())

    # -- declarations ------------------------------------------------------
    def method(self) -> Node:
        node = Node("MethodDeclaration")
        while self.tok.kind == "keyword" and self.tok.text in MODIFIERS:
            node.children.append(_leaf("Modifier", self.advance()))
        self.check_supported()
        if self.at("<"):
            raise self.unsupported("generics")
        node.children.append(self.type_())
        node.children.append(self.ident())
        self.expect("(")
        if not self.at(")"):
            while True:
                node.children.append(self.parameter())
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        self.check_supported()
        if self.at(";"):
            raise self.unsupported("method without body")
        node.children.append(self.block())
        if self.tok.kind != "eof":
            if self.at("}"):
                raise self.error("unbalanced braces: unexpected '}'")
            raise self.error(f"unexpected {self.tok.text!r} after method body")
        return node

    def parameter(self):
        node = Node("Parameter")
        if self.at("final"):
            node.children.append(_leaf("Modifier", self.advance()))
        node.children.append(self.type_())
        node.children.append(self.ident())
        return node

    def type_(self):
        tok = self.tok
        if tok.kind == "keyword" and tok.text in PRIMITIVES:
            self.advance()
            t = _leaf("PrimitiveType", tok)
        elif tok.kind == "ident":
            t = Node("ClassType", [self.ident()])
            while self.at(".") and self.peek().kind == "ident":
                self.advance()
                t.children.append(self.ident())
        else:
            self.check_supported()
            raise self.error(f"expected a type, found {tok.text!r}")
        if self.at("<"):
            raise self.unsupported("generics")
        if self.at("["):
            raise self.unsupported("array")
        return t

    # -- statements --------------------------------------------------------
    def block(self):
        self.expect("{")
        node = Node("Block")
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unbalanced braces: missing '}'")
            node.children.append(self.statement())
        self.advance()
        return node

    def _looks_like_decl(self) -> bool:
        t = self.tok
        if t.kind == "keyword" and (t.text in PRIMITIVES or t.text == "final"):
            return True
        if t.kind != "ident":
            return False
        j = self.i + 1
        while self.toks[j].text == "." and self.toks[j].kind == "op" \
                and self.toks[j + 1].kind == "ident":
            j += 2
        nxt = self.toks[j]
        if nxt.kind == "op" and nxt.text == "<":
            # Name<...> followed by an identifier is a generic declaration
            depth, k = 0, j
            while self.toks[k].kind != "eof":
                if self.toks[k].text == "<":
                    depth += 1
                elif self.toks[k].text == ">":
                    depth -= 1
                elif self.toks[k].text == ">>":
                    depth -= 2
                elif self.toks[k].kind not in ("ident", "op") or self.toks[k].text in (";", "(", ")", "="):
                    return False
                k += 1
                if depth <= 0:
                    break
            if depth <= 0 and self.toks[k].kind == "ident":
                raise self.unsupported("generics", nxt)
            return False
        if nxt.kind == "op" and nxt.text == "[" and self.toks[j + 1].text == "]":
            raise self.unsupported("array", nxt)
        return nxt.kind == "ident"

    def local_decl(self, need_semicolon=True):
        node = Node("LocalVarDecl")
        if self.at("final"):
            node.children.append(_leaf("Modifier", self.advance()))
        node.children.append(self.type_())
        while True:
            decl = Node("VariableDeclarator", [self.ident()])
            if self.at("="):
                self.advance()
                decl.children.append(self.expression())
            node.children.append(decl)
            if not self.at(","):
                break
            self.advance()
        if need_semicolon:
            self.expect(";")
        return node

    def statement(self):
        t = self.tok
        self.check_supported()
        if t.kind == "op" and t.text == "{":
            return self.block()
        if t.kind == "op" and t.text == ";":
            raise self.unsupported("empty statement")
        if t.kind == "keyword":
            if t.text == "return":
                node = Node("ReturnStmt", [_leaf("Keyword", self.advance())])
                if not self.at(";"):
                    node.children.append(self.expression())
                self.expect(";")
                return node
            if t.text == "if":
                node = Node("IfStmt", [_leaf("Keyword", self.advance())])
                self.expect("(")
                node.children.append(self.expression())
                self.expect(")")
                node.children.append(self.statement())
                if self.at("else"):
                    self.advance()
                    node.children.append(self.statement())
                return node
            if t.text == "while":
                node = Node("WhileStmt", [_leaf("Keyword", self.advance())])
                self.expect("(")
                node.children.append(self.expression())
                self.expect(")")
                node.children.append(self.statement())
                return node
            if t.text == "for":
                return self.for_()
            if t.text == "synchronized":
                raise self.unsupported("synchronized block")
            if t.text == "else":
                raise self.error("'else' without 'if'")
        if self._looks_like_decl():
            return self.local_decl()
        expr = self.expression()
        self._check_statement_expr(expr, t)
        self.expect(";")
        return Node("ExpressionStmt", [expr])

    def _check_statement_expr(self, expr, tok):
        if expr.kind not in ("MethodCall", "ObjectCreation", "PreIncrement", "PreDecrement",
                             "PostIncrement", "PostDecrement", *ASSIGN_KINDS.values()):
            raise self.error("not a statement", tok)

    def for_(self):
        node = Node("ForStmt", [_leaf("Keyword", self.advance())])
        self.expect("(")
        if not self.at(";"):
            if self._looks_like_decl():
                node.children.append(self.local_decl(need_semicolon=False))
            else:
                self._expr_list(node)
        if self.at(":"):
            raise self.unsupported("enhanced for")
        self.expect(";")
        if not self.at(";"):
            node.children.append(self.expression())
        self.expect(";")
        if not self.at(")"):
            self._expr_list(node)
        self.expect(")")
        node.children.append(self.statement())
        return node

    def _expr_list(self, node):
        while True:
            tok = self.tok
            e = self.expression()
            self._check_statement_expr(e, tok)
            node.children.append(e)
            if not self.at(","):
                return
            self.advance()

    # -- expressions -------------------------------------------------------
    def expression(self):
        left = self.binary(0)
        t = self.tok
        if t.kind == "op" and t.text in ASSIGN_KINDS:
            if left.kind not in ("NameExpr", "FieldAccess"):
                raise self.error("invalid assignment target", t)
            self.advance()
            right = self.expression()
            return Node(ASSIGN_KINDS[t.text], [left, right])
        self.check_supported()
        return left

    def binary(self, level):
        if level == len(_LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in _LEVELS[level]:
            op = self.advance().text
            right = self.binary(level + 1)
            left = Node(BINARY_KINDS[op], [left, right])
        return left

    def unary(self):
        t = self.tok
        if t.kind == "op":
            kind = {"!": "UnaryNot", "-": "UnaryMinus", "++": "PreIncrement",
                    "--": "PreDecrement"}.get(t.text)
            if kind:
                self.advance()
                operand = self.unary()
                if kind in ("PreIncrement", "PreDecrement") and \
                        operand.kind not in ("NameExpr", "FieldAccess"):
                    raise self.error("invalid increment target", t)
                return Node(kind, [operand])
            if t.text == "+":
                raise self.unsupported("unary plus")
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while True:
            if self.at("."):
                self.advance()
                if self.tok.kind == "keyword" and self.tok.text in ("new", "this", "class"):
                    raise self.unsupported(f"qualified {self.tok.text}")
                self.check_supported()
                if self.at("<"):
                    raise self.unsupported("generics")
                name = self.ident()
                if self.at("("):
                    e = Node("MethodCall", [e, name] + self.arguments())
                else:
                    e = Node("FieldAccess", [e, name])
            elif self.tok.kind == "op" and self.tok.text in ("++", "--"):
                if e.kind not in ("NameExpr", "FieldAccess"):
                    raise self.error("invalid increment target")
                kind = "PostIncrement" if self.advance().text == "++" else "PostDecrement"
                e = Node(kind, [e])
            else:
                self.check_supported()
                return e

    def arguments(self):
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.expression())
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        return args

    def primary(self):
        t = self.tok
        k = t.kind
        if k == "int":
            return _leaf("IntegerLiteral", self.advance())
        if k == "float":
            return _leaf("DoubleLiteral", self.advance())
        if k == "string":
            return _leaf("StringLiteral", self.advance())
        if k == "char":
            return _leaf("CharLiteral", self.advance())
        if k == "ident":
            name = self.ident()
            if self.at("("):
                return Node("MethodCall", [name] + self.arguments())
            return Node("NameExpr", [name])
        if k == "keyword":
            if t.text in ("true", "false"):
                return _leaf("BooleanLiteral", self.advance())
            if t.text == "null":
                return _leaf("NullLiteral", self.advance())
            if t.text == "this":
                return _leaf("ThisExpr", self.advance())
            if t.text == "new":
                self.advance()
                if self.tok.kind == "keyword" and self.tok.text in PRIMITIVES:
                    raise self.unsupported("array")
                typ = self.type_()
                if self.at("{"):
                    raise self.unsupported("anonymous class")
                node = Node("ObjectCreation", [typ] + self.arguments())
                if self.at("{"):
                    raise self.unsupported("anonymous class")
                return node
        if k == "op" and t.text == "(":
            self.advance()
            nt = self.tok
            if nt.kind == "keyword" and nt.text in PRIMITIVES:
                raise self.unsupported("cast", nt)
            if self.at(")"):
                raise self.unsupported("lambda", nt)
            inner = self.expression()
            self.expect(")")
            nxt = self.tok
            if inner.kind in ("NameExpr", "FieldAccess") and (
                    nxt.kind in ("ident", "int", "float", "string", "char")
                    or (nxt.kind == "keyword" and nxt.text in ("this", "new", "null", "true",
                                                               "false"))
                    or (nxt.kind == "op" and nxt.text in ("(", "!"))):
                raise self.unsupported("cast", t)
            if nxt.kind == "op" and nxt.text == "->":
                raise self.unsupported("lambda", nxt)
            return Node("EnclosedExpr", [inner])
        self.check_supported()
        if k == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected token {t.text!r}")


def _link(node, parent=None):
    node.parent = parent
    for c in node.children:
        _link(c, node)


def parse_java_method(source: str) -> Ast:
    tokens = tokenize(source)
    root = _Parser(tokens).method()
    _link(root)
    return Ast(root, root.terminals())
