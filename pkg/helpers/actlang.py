# actlang.py
"""
The action language the action agent writes: lexer, recursive-descent parser, static checks,
pretty-printer and code extraction from model replies. Grammar: docs/grammar.ebnf.
"""
import logging
import re
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

MAX_REPEAT = 256
KEYWORDS = {"fn", "repeat", "as", "if", "else", "let", "not", "and", "or"}
FOUND_VAR = "found"  # bound by explore()

# name -> (min args, max args)
PRIMITIVES = {
    "mine": (2, 2),
    "dig": (1, 1),
    "craft": (1, 2),
    "smelt": (2, 3),
    "place": (1, 2),
    "equip": (1, 1),
    "move_to": (1, 1),
    "look_at": (1, 1),
    "explore": (4, 4),
    "pillar_up": (1, 1),
    "use_item": (2, 2),
    "chat": (1, 1),
}
VALUE_BUILTINS = {
    "here": (0, 0),
    "rel": (3, 3),
    "surface": (2, 2),
    "count": (1, 1),
    "block_at": (1, 1),
    "explore": (4, 4),
}
PREDICATES = {"has": (2, 2), "found": (1, 1)}
RESERVED_NAMES = set(PRIMITIVES) | set(VALUE_BUILTINS) | set(PREDICATES)

Loc = tuple[int, int]


class ActlangError(Exception):
    """Base class for language errors."""


class ParseError(ActlangError):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"line {line}, col {col}: {message}")


class CheckError(ActlangError):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"line {line}, col {col}: {message}")


class NoCodeFound(ActlangError):
    def __init__(self, reason: str = "no code block and no parsable program in the reply"):
        super().__init__(reason)


def format_error(err: Exception) -> str:
    if isinstance(err, (ParseError, CheckError)):
        kind = "Parse error" if isinstance(err, ParseError) else "Check error"
        return f"{kind} at line {err.line}, col {err.col}: {err.message}"
    return str(err)


# ---------------- AST ----------------

def _loc():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Int:
    value: int
    loc: Loc = _loc()


@dataclass(frozen=True)
class Str:
    value: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Var:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class PosLit:
    items: tuple  # three expressions
    loc: Loc = _loc()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class Neg:
    operand: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class ExprCall:
    name: str
    args: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class PredCall:
    name: str  # has | found
    args: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class Compare:
    op: str  # == | !=
    left: object
    right: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class Not:
    operand: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class And:
    left: object
    right: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class Or:
    left: object
    right: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class Let:
    name: str
    expr: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class Repeat:
    count: int
    var: str | None
    body: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class FnDef:
    name: str
    params: tuple[str, ...]
    body: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class Program:
    functions: tuple[FnDef, ...]
    body: tuple

    def function_names(self) -> list[str]:
        return [f.name for f in self.functions]


# ---------------- LEXER ----------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|[(){}\[\],;=+\-*])
""", re.VERBOSE)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


@dataclass(frozen=True)
class Token:
    kind: str  # int | str | ident | kw | op | eof
    text: str
    value: object
    line: int
    col: int


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(line, col + i + 1, f"unknown escape \\{nxt}")
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            ch = source[pos]
            if ch in "\"'":
                raise ParseError(line, col, "unterminated string")
            raise ParseError(line, col, f"unexpected character {ch!r}")
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "int":
            tokens.append(Token("int", text, int(text), line, col))
        elif kind == "str":
            tokens.append(Token("str", text, _unescape(text[1:-1], line, col), line, col))
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, text, line, col))
        elif kind == "op":
            tokens.append(Token("op", text, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", None, line, pos - line_start + 1))
    return tokens


# ---------------- PARSER ----------------

class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    # token helpers
    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i = min(self.i + 1, len(self.tokens) - 1)
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            wanted = what or (repr(text) if text else kind)
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ParseError(tok.line, tok.col, f"expected {wanted}, found {found}")
        return self.advance()

    # program
    def parse_program(self) -> Program:
        functions, body = [], []
        while not self.at("eof"):
            if self.at("kw", "fn"):
                functions.append(self.parse_fn())
            else:
                stmt = self.parse_statement()
                if stmt is not None:
                    body.append(stmt)
        return Program(tuple(functions), tuple(body))

    def parse_fn(self) -> FnDef:
        kw = self.expect("kw", "fn")
        name = self.expect("ident", what="function name").text
        self.expect("op", "(")
        params = []
        if not self.at("op", ")"):
            params.append(self.expect("ident", what="parameter name").text)
            while self.accept("op", ","):
                params.append(self.expect("ident", what="parameter name").text)
        self.expect("op", ")")
        return FnDef(name, tuple(params), self.parse_block(), (kw.line, kw.col))

    def parse_block(self) -> tuple:
        self.expect("op", "{")
        body = []
        while not self.at("op", "}"):
            if self.at("eof"):
                tok = self.peek()
                raise ParseError(tok.line, tok.col, "expected '}', found end of input")
            if self.at("kw", "fn"):
                tok = self.peek()
                raise ParseError(tok.line, tok.col, "functions may only be defined at top level")
            stmt = self.parse_statement()
            if stmt is not None:
                body.append(stmt)
        self.expect("op", "}")
        return tuple(body)

    def parse_statement(self):
        tok = self.peek()
        loc = (tok.line, tok.col)
        if self.accept("op", ";"):
            return None
        if self.accept("kw", "let"):
            name = self.expect("ident", what="variable name").text
            self.expect("op", "=")
            expr = self.parse_expr()
            self.expect("op", ";")
            return Let(name, expr, loc)
        if self.accept("kw", "repeat"):
            count_tok = self.expect("int", what="a literal repeat count")
            if count_tok.value > MAX_REPEAT:
                raise ParseError(count_tok.line, count_tok.col, f"repeat count {count_tok.value} exceeds {MAX_REPEAT}")
            var = None
            if self.accept("kw", "as"):
                var = self.expect("ident", what="loop variable name").text
            return Repeat(count_tok.value, var, self.parse_block(), loc)
        if self.at("kw", "if"):
            return self.parse_if()
        if tok.kind == "ident":
            self.advance()
            args = self.parse_args()
            self.expect("op", ";")
            return Call(tok.text, args, loc)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(tok.line, tok.col, f"expected a statement, found {found}")

    def parse_if(self) -> If:
        kw = self.expect("kw", "if")
        cond = self.parse_pred()
        then = self.parse_block()
        orelse: tuple = ()
        if self.accept("kw", "else"):
            orelse = (self.parse_if(),) if self.at("kw", "if") else self.parse_block()
        return If(cond, then, orelse, (kw.line, kw.col))

    def parse_args(self) -> tuple:
        self.expect("op", "(")
        args = []
        if not self.at("op", ")"):
            args.append(self.parse_expr())
            while self.accept("op", ","):
                args.append(self.parse_expr())
        self.expect("op", ")")
        return tuple(args)

    # predicates: or < and < not < atom
    def parse_pred(self):
        left = self.parse_and()
        while self.at("kw", "or"):
            tok = self.advance()
            left = Or(left, self.parse_and(), (tok.line, tok.col))
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at("kw", "and"):
            tok = self.advance()
            left = And(left, self.parse_not(), (tok.line, tok.col))
        return left

    def parse_not(self):
        if self.at("kw", "not"):
            tok = self.advance()
            return Not(self.parse_not(), (tok.line, tok.col))
        return self.parse_atom()

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "(":
            saved = self.i
            try:
                self.advance()
                inner = self.parse_pred()
                self.expect("op", ")")
                if not (self.at("op", "==") or self.at("op", "!=")):
                    return inner
            except ParseError:
                pass
            self.i = saved
        if tok.kind == "ident" and tok.text in PREDICATES and self.peek(1).text == "(":
            self.advance()
            return PredCall(tok.text, self.parse_args(), (tok.line, tok.col))
        left = self.parse_expr()
        op = self.peek()
        if op.kind == "op" and op.text in ("==", "!="):
            self.advance()
            return Compare(op.text, left, self.parse_expr(), (op.line, op.col))
        raise ParseError(op.line, op.col, "expected a condition (has(...), found(...), or a == / != comparison)")

    # expressions: + - < * < unary - < primary
    def parse_expr(self):
        left = self.parse_term()
        while self.at("op", "+") or self.at("op", "-"):
            tok = self.advance()
            left = BinOp(tok.text, left, self.parse_term(), (tok.line, tok.col))
        return left

    def parse_term(self):
        left = self.parse_unary()
        while self.at("op", "*"):
            tok = self.advance()
            left = BinOp("*", left, self.parse_unary(), (tok.line, tok.col))
        return left

    def parse_unary(self):
        if self.at("op", "-"):
            tok = self.advance()
            if self.at("int"):
                lit = self.advance()
                return Int(-lit.value, (tok.line, tok.col))
            return Neg(self.parse_unary(), (tok.line, tok.col))
        return self.parse_primary()

    def parse_primary(self):
        tok = self.peek()
        loc = (tok.line, tok.col)
        if tok.kind == "int":
            self.advance()
            return Int(tok.value, loc)
        if tok.kind == "str":
            self.advance()
            return Str(tok.value, loc)
        if tok.kind == "ident":
            self.advance()
            if self.at("op", "("):
                return ExprCall(tok.text, self.parse_args(), loc)
            return Var(tok.text, loc)
        if self.accept("op", "["):
            items = [self.parse_expr()]
            for _ in range(2):
                self.expect("op", ",")
                items.append(self.parse_expr())
            self.expect("op", "]")
            return PosLit(tuple(items), loc)
        if self.accept("op", "("):
            inner = self.parse_expr()
            self.expect("op", ")")
            return inner
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(tok.line, tok.col, f"expected a value, found {found}")


def parse(source: str) -> Program:
    """Parse source text into a Program. Raises ParseError with the offending location."""
    return Parser(source).parse_program()


# ---------------- STATIC CHECKS ----------------

def _check_arity(name: str, args: tuple, table: dict, loc: Loc) -> None:
    lo, hi = table[name]
    if not lo <= len(args) <= hi:
        expected = str(lo) if lo == hi else f"{lo}-{hi}"
        raise CheckError(loc[0], loc[1], f"{name}() takes {expected} arguments, got {len(args)}")


class _Checker:
    def __init__(self, functions: dict[str, FnDef]):
        self.functions = functions
        self.calls: dict[str, set[str]] = {name: set() for name in functions}
        self.current: str | None = None

    def expr(self, node, scopes: list[set[str]]) -> None:
        if isinstance(node, (Int, Str)):
            return
        if isinstance(node, Var):
            if not any(node.name in s for s in scopes):
                raise CheckError(node.loc[0], node.loc[1], f"undefined variable {node.name!r}")
        elif isinstance(node, PosLit):
            for item in node.items:
                self.expr(item, scopes)
        elif isinstance(node, BinOp):
            self.expr(node.left, scopes)
            self.expr(node.right, scopes)
        elif isinstance(node, Neg):
            self.expr(node.operand, scopes)
        elif isinstance(node, ExprCall):
            if node.name not in VALUE_BUILTINS:
                raise CheckError(node.loc[0], node.loc[1], f"{node.name}() does not produce a value")
            _check_arity(node.name, node.args, VALUE_BUILTINS, node.loc)
            for arg in node.args:
                self.expr(arg, scopes)

    def pred(self, node, scopes: list[set[str]]) -> None:
        if isinstance(node, (And, Or)):
            self.pred(node.left, scopes)
            self.pred(node.right, scopes)
        elif isinstance(node, Not):
            self.pred(node.operand, scopes)
        elif isinstance(node, Compare):
            self.expr(node.left, scopes)
            self.expr(node.right, scopes)
        elif isinstance(node, PredCall):
            _check_arity(node.name, node.args, PREDICATES, node.loc)
            if node.name == "found" and not isinstance(node.args[0], Var):
                raise CheckError(node.loc[0], node.loc[1], "found() takes a variable name")
            for arg in node.args:
                self.expr(arg, scopes)

    def block(self, body: tuple, scopes: list[set[str]]) -> None:
        scopes = scopes + [set()]
        for stmt in body:
            self.stmt(stmt, scopes)

    def stmt(self, node, scopes: list[set[str]]) -> None:
        if isinstance(node, Let):
            self.expr(node.expr, scopes)
            scopes[-1].add(node.name)
        elif isinstance(node, Repeat):
            inner = scopes + [{node.var}] if node.var else scopes
            self.block(node.body, inner)
        elif isinstance(node, If):
            self.pred(node.cond, scopes)
            self.block(node.then, scopes)
            self.block(node.orelse, scopes)
        elif isinstance(node, Call):
            for arg in node.args:
                self.expr(arg, scopes)
            if node.name in PRIMITIVES:
                _check_arity(node.name, node.args, PRIMITIVES, node.loc)
                return
            fn = self.functions.get(node.name)
            if fn is None:
                raise CheckError(node.loc[0], node.loc[1], f"undefined function {node.name!r}")
            if len(node.args) != len(fn.params):
                raise CheckError(node.loc[0], node.loc[1],
                                 f"{node.name}() takes {len(fn.params)} arguments, got {len(node.args)}")
            if self.current is not None:
                self.calls[self.current].add(node.name)

    def function(self, fn: FnDef) -> None:
        self.current = fn.name
        self.block(fn.body, [{FOUND_VAR}, set(fn.params)])
        self.current = None

    def find_cycle(self) -> list[str] | None:
        state: dict[str, int] = {}  # 1 = on stack, 2 = done
        stack: list[str] = []

        def visit(name: str) -> list[str] | None:
            state[name] = 1
            stack.append(name)
            for callee in sorted(self.calls.get(name, ())):
                if state.get(callee) == 1:
                    return stack[stack.index(callee):] + [callee]
                if callee not in state:
                    cycle = visit(callee)
                    if cycle:
                        return cycle
            stack.pop()
            state[name] = 2
            return None

        for name in sorted(self.calls):
            if name not in state:
                cycle = visit(name)
                if cycle:
                    return cycle
        return None


def check(program: Program, library: dict[str, FnDef] | None = None) -> None:
    """
    Static checks: defined variables and functions, arities, no recursion through the call graph
    (library functions included), no duplicate or reserved function names. Raises CheckError.
    """
    functions: dict[str, FnDef] = dict(library or {})
    seen: set[str] = set()
    for fn in program.functions:
        if fn.name in RESERVED_NAMES:
            raise CheckError(fn.loc[0], fn.loc[1], f"{fn.name!r} is a built-in and cannot be redefined")
        if fn.name in seen:
            raise CheckError(fn.loc[0], fn.loc[1], f"function {fn.name!r} is defined twice")
        if len(set(fn.params)) != len(fn.params):
            raise CheckError(fn.loc[0], fn.loc[1], f"function {fn.name!r} repeats a parameter name")
        seen.add(fn.name)
        functions[fn.name] = fn

    checker = _Checker(functions)
    for fn in functions.values():
        checker.function(fn)
    checker.block(program.body, [{FOUND_VAR}])

    cycle = checker.find_cycle()
    if cycle:
        fn = functions[cycle[0]]
        raise CheckError(fn.loc[0], fn.loc[1], "recursion is not allowed: " + " -> ".join(cycle))


def compile_program(source: str, library: dict[str, FnDef] | None = None) -> Program:
    program = parse(source)
    check(program, library)
    return program


# ---------------- PRETTY PRINTER ----------------

def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def pretty_expr(node) -> str:
    if isinstance(node, Int):
        return str(node.value)
    if isinstance(node, Str):
        return _quote(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, PosLit):
        return "[" + ", ".join(pretty_expr(i) for i in node.items) + "]"
    if isinstance(node, BinOp):
        def side(n):
            return f"({pretty_expr(n)})" if isinstance(n, BinOp) else pretty_expr(n)
        return f"{side(node.left)} {node.op} {side(node.right)}"
    if isinstance(node, Neg):
        return f"-({pretty_expr(node.operand)})"
    if isinstance(node, ExprCall):
        return f"{node.name}(" + ", ".join(pretty_expr(a) for a in node.args) + ")"
    raise TypeError(f"not an expression: {node!r}")


def pretty_pred(node) -> str:
    def side(n):
        return f"({pretty_pred(n)})" if isinstance(n, (And, Or)) else pretty_pred(n)

    if isinstance(node, Or):
        return f"{side(node.left)} or {side(node.right)}"
    if isinstance(node, And):
        return f"{side(node.left)} and {side(node.right)}"
    if isinstance(node, Not):
        return f"not {side(node.operand)}"
    if isinstance(node, Compare):
        return f"{pretty_expr(node.left)} {node.op} {pretty_expr(node.right)}"
    if isinstance(node, PredCall):
        return f"{node.name}(" + ", ".join(pretty_expr(a) for a in node.args) + ")"
    raise TypeError(f"not a condition: {node!r}")


def _pretty_block(body: tuple, depth: int) -> list[str]:
    lines = []
    for stmt in body:
        lines.extend(_pretty_stmt(stmt, depth))
    return lines


def _pretty_stmt(node, depth: int) -> list[str]:
    pad = "    " * depth
    if isinstance(node, Let):
        return [f"{pad}let {node.name} = {pretty_expr(node.expr)};"]
    if isinstance(node, Call):
        return [f"{pad}{node.name}(" + ", ".join(pretty_expr(a) for a in node.args) + ");"]
    if isinstance(node, Repeat):
        head = f"{pad}repeat {node.count}" + (f" as {node.var}" if node.var else "") + " {"
        return [head, *_pretty_block(node.body, depth + 1), f"{pad}}}"]
    if isinstance(node, If):
        lines = [f"{pad}if {pretty_pred(node.cond)} {{", *_pretty_block(node.then, depth + 1)]
        if node.orelse:
            lines.append(f"{pad}}} else {{")
            lines.extend(_pretty_block(node.orelse, depth + 1))
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"not a statement: {node!r}")


def pretty_print(program: Program) -> str:
    lines: list[str] = []
    for fn in program.functions:
        lines.append(f"fn {fn.name}(" + ", ".join(fn.params) + ") {")
        lines.extend(_pretty_block(fn.body, 1))
        lines.append("}")
        lines.append("")
    lines.extend(_pretty_block(program.body, 0))
    return "\n".join(lines).rstrip("\n") + "\n"


def function_source(fn: FnDef) -> str:
    return pretty_print(Program((fn,), ()))


# ---------------- CODE EXTRACTION ----------------

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def _parses(source: str) -> bool:
    try:
        program = parse(source)
    except ParseError:
        return False
    return bool(program.functions or program.body)


def extract_code(response: str) -> str:
    """
    The interior of the last fenced code block; without fences, the longest line-aligned suffix that
    parses as a non-empty program. Raises NoCodeFound.
    """
    blocks = _FENCE_RE.findall(response)
    if blocks:
        return blocks[-1]
    lines = response.splitlines()
    for start in range(len(lines)):
        suffix = "\n".join(lines[start:])
        if suffix.strip() and _parses(suffix):
            return suffix + "\n"
    raise NoCodeFound()
