"""Textual intermediate representation for a closed-world Java-like language.

The IR is line-oriented UTF-8 text. `#` starts a comment (outside string
literals), blank lines are ignored, and every statement sits on its own line.

Declarations::

    class <Name> [extends <Name>] [implements <Name>{,<Name>}] {
      field <name> : <Type>
      method [static] [public|nonpublic] <name>(<v>:<Type>{,<v>:<Type>}) : <Type|void>
        { <var-decls> <statements> } | unmodeled | native
    }
    interface <Name> [extends <Name>{,<Name>}] { ... }   # methods unmodeled only

Statements (one per line, inside a `{ ... }` method body, after `var v: T`
declarations)::

    v = new T                 v = newarray T            v = v2
    v = v2.f                  v.f = v2                  v = v2[*]
    v[*] = v2                 v = "text"                v = unknownstring
    v = null                  v = (T) v2                return [v]
    [v =] v2.m(v...)          [v =] T.m(v...)           if * goto L
    goto L                    L:
    v = Class.forName(v2)
    v = v2.newInstance()
    v = v2.getMethod(v3[, [T{,T}] | unknown])           # also getDeclaredMethod
    v = v2.getMethods()                                 # also getDeclaredMethods
    [v =] v2.invoke(v3|null, v4|null)

The spellings `Class.forName`, `newInstance`, `getMethod`, `getDeclaredMethod`,
`getMethods`, `getDeclaredMethods` and `invoke` are reserved at call sites and
always parse as reflective statements.

Types are dotted identifiers (``$`` allowed); ``T[]`` is an array of T, one
level deep only. `java.lang.Object`, `java.lang.String`, `java.lang.Class` and
`java.lang.reflect.Method` exist implicitly in every program.

Every statement carries a site id, unique over the whole program and stable
across runs (assigned in declaration order, starting at 1).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

logger = logging.getLogger(__name__)

OBJECT = "java.lang.Object"
STRING = "java.lang.String"
CLASS = "java.lang.Class"
METHOD = "java.lang.reflect.Method"
METHOD_ARRAY = METHOD + "[]"
VOID = "void"

#: Types that exist in every program without a declaration.
BUILTIN_TYPES = (OBJECT, STRING, CLASS, METHOD)

EXIT = -1  # synthetic exit node of every Cfg


class IrError(Exception):
    """Parse or model-construction failure with a distinct diagnostic code."""

    def __init__(self, code: str, message: str, line: int = 0, col: int = 0):
        super().__init__(f"[{code}] line {line}: {message}" if line else f"[{code}] {message}")
        self.code = code
        self.message = message
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stmt:
    """Base statement; `site` is the program-wide unique id."""

    site: int
    line: int = field(compare=False, default=0, kw_only=True)


@dataclass(frozen=True)
class Alloc(Stmt):
    target: str = ""
    type_name: str = ""


@dataclass(frozen=True)
class ArrayAlloc(Stmt):
    target: str = ""
    elem_type: str = ""

    @property
    def type_name(self) -> str:
        return self.elem_type + "[]"


@dataclass(frozen=True)
class Copy(Stmt):
    target: str = ""
    source: str = ""


@dataclass(frozen=True)
class Load(Stmt):
    target: str = ""
    base: str = ""
    field_name: str = ""


@dataclass(frozen=True)
class Store(Stmt):
    base: str = ""
    field_name: str = ""
    source: str = ""


@dataclass(frozen=True)
class ArrayLoad(Stmt):
    target: str = ""
    base: str = ""


@dataclass(frozen=True)
class ArrayStore(Stmt):
    base: str = ""
    source: str = ""


@dataclass(frozen=True)
class StringConst(Stmt):
    target: str = ""
    text: str = ""


@dataclass(frozen=True)
class UnknownString(Stmt):
    target: str = ""


@dataclass(frozen=True)
class NullAssign(Stmt):
    target: str = ""


@dataclass(frozen=True)
class Cast(Stmt):
    target: str = ""
    type_name: str = ""
    source: str = ""


@dataclass(frozen=True)
class VirtualCall(Stmt):
    target: Optional[str] = None
    base: str = ""
    method_name: str = ""
    args: Tuple[str, ...] = ()


@dataclass(frozen=True)
class StaticCall(Stmt):
    target: Optional[str] = None
    class_name: str = ""
    method_name: str = ""
    args: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ForName(Stmt):
    target: str = ""
    name_var: str = ""


@dataclass(frozen=True)
class NewInstance(Stmt):
    target: str = ""
    base: str = ""


@dataclass(frozen=True)
class GetMethod(Stmt):
    """getMethod / getDeclaredMethod; `type_lits` is None for `unknown`."""

    target: str = ""
    base: str = ""
    name_var: str = ""
    type_lits: Optional[Tuple[str, ...]] = ()
    declared_only: bool = False


@dataclass(frozen=True)
class GetMethods(Stmt):
    """getMethods / getDeclaredMethods."""

    target: str = ""
    base: str = ""
    declared_only: bool = False


@dataclass(frozen=True)
class Invoke(Stmt):
    """`recv`/`args_var` are None when the literal `null` was written."""

    target: Optional[str] = None
    base: str = ""
    recv: Optional[str] = None
    args_var: Optional[str] = None


@dataclass(frozen=True)
class Branch(Stmt):
    label: str = ""


@dataclass(frozen=True)
class Goto(Stmt):
    label: str = ""


@dataclass(frozen=True)
class Label(Stmt):
    name: str = ""


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[str] = None


REFLECTIVE_KINDS = (ForName, NewInstance, GetMethod, GetMethods, Invoke)


def stmt_target(s: Stmt) -> Optional[str]:
    """The variable defined by `s`, if any."""
    return getattr(s, "target", None)


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodModel:
    owner: str
    name: str
    params: Tuple[Tuple[str, str], ...]  # (variable, declared type)
    return_type: str  # type name or "void"
    is_static: bool
    visibility: str  # "public" | "nonpublic"
    body_kind: str  # "code" | "unmodeled" | "native"
    body: Tuple[Stmt, ...]
    locals: Tuple[Tuple[str, str], ...]  # var decls, excluding params

    @property
    def key(self) -> str:
        sig = ",".join(t for _, t in self.params)
        return f"{self.owner}.{self.name}({sig})"

    @property
    def label(self) -> str:
        return f"{self.owner}.{self.name}/{len(self.params)}"

    @property
    def param_types(self) -> Tuple[str, ...]:
        return tuple(t for _, t in self.params)

    @property
    def has_code(self) -> bool:
        return self.body_kind == "code"

    def var_type(self, var: str) -> Optional[str]:
        for v, t in self.params:
            if v == var:
                return t
        for v, t in self.locals:
            if v == var:
                return t
        return None


@dataclass(frozen=True)
class ClassModel:
    name: str
    superclass: Optional[str]  # None only for java.lang.Object
    interfaces: Tuple[str, ...]
    fields: Tuple[Tuple[str, str], ...]
    methods: Tuple[MethodModel, ...]
    is_interface: bool = False
    builtin: bool = False


@dataclass
class ProgramModel:
    """Closed-world program: classes, methods, and a global site index."""

    classes: Dict[str, ClassModel]
    methods: Dict[str, MethodModel]  # method key -> model
    site_index: Dict[int, Tuple[str, Stmt]]  # site -> (method key, stmt)

    def __eq__(self, other):  # structural, ignoring derived indexes
        return isinstance(other, ProgramModel) and self.classes == other.classes

    def declared(self, type_name: str) -> bool:
        base = type_name[:-2] if type_name.endswith("[]") else type_name
        return base in self.classes

    def class_of(self, name: str) -> Optional[ClassModel]:
        return self.classes.get(name)

    def method_at(self, site: int) -> MethodModel:
        return self.methods[self.site_index[site][0]]

    def stmt_at(self, site: int) -> Stmt:
        return self.site_index[site][1]

    def find_entry(self, spec: str) -> MethodModel:
        """Resolve `Class.method` to a static zero-parameter method."""
        cls_name, _, mname = spec.rpartition(".")
        if not cls_name or cls_name not in self.classes:
            raise IrError("no-entry", f"entry class not found in '{spec}'")
        for m in self.classes[cls_name].methods:
            if m.name == mname and not m.params:
                if not m.is_static:
                    raise IrError("no-entry", f"entry method {spec} is not static")
                return m
        raise IrError("no-entry", f"no zero-parameter method '{spec}'")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_ID = r"[A-Za-z_$][A-Za-z0-9_$]*"
_TYPE = rf"(?:{_ID}\.)*{_ID}(?:\[\])?"
_DOTTED = rf"(?:{_ID}\.)*{_ID}"

_RE_CLASS = re.compile(
    rf"^(class|interface)\s+({_DOTTED})"
    rf"(?:\s+extends\s+({_DOTTED}(?:\s*,\s*{_DOTTED})*))?"
    rf"(?:\s+implements\s+({_DOTTED}(?:\s*,\s*{_DOTTED})*))?"
    rf"\s*\{{\s*(\}})?$"
)
_RE_FIELD = re.compile(rf"^field\s+({_ID})\s*:\s*({_TYPE})$")
_RE_METHOD = re.compile(
    rf"^method(\s+static)?(\s+public|\s+nonpublic)?\s+({_ID})"
    rf"\(((?:\s*{_ID}\s*:\s*{_TYPE}\s*(?:,\s*{_ID}\s*:\s*{_TYPE}\s*)*)?)\)"
    rf"\s*:\s*({_TYPE}|void)\s*(\{{\s*\}}|\{{|unmodeled|native)$"
)
_RE_VAR = re.compile(rf"^var\s+({_ID})\s*:\s*({_TYPE})$")

_STMT_RES: List[Tuple[re.Pattern, str]] = [
    (re.compile(rf"^({_ID}) = new ({_TYPE})$"), "alloc"),
    (re.compile(rf"^({_ID}) = newarray ({_TYPE})$"), "newarray"),
    (re.compile(rf'^({_ID}) = "([^"]*)"$'), "strconst"),
    (re.compile(rf"^({_ID}) = unknownstring$"), "unknownstring"),
    (re.compile(rf"^({_ID}) = null$"), "null"),
    (re.compile(rf"^({_ID}) = \(({_TYPE})\) ({_ID})$"), "cast"),
    (re.compile(rf"^({_ID}) = Class\.forName\(({_ID})\)$"), "forname"),
    (re.compile(rf"^({_ID}) = ({_ID})\.newInstance\(\)$"), "newinstance"),
    (
        re.compile(
            rf"^({_ID}) = ({_ID})\.(getMethod|getDeclaredMethod)"
            rf"\(({_ID})(?:,\s*(unknown|\[[^\]]*\]))?\)$"
        ),
        "getmethod",
    ),
    (re.compile(rf"^({_ID}) = ({_ID})\.(getMethods|getDeclaredMethods)\(\)$"), "getmethods"),
    (
        re.compile(rf"^(?:({_ID}) = )?({_ID})\.invoke\(({_ID}|null),\s*({_ID}|null)\)$"),
        "invoke",
    ),
    (re.compile(rf"^({_ID}) = ({_ID})\[\*\]$"), "arrayload"),
    (re.compile(rf"^({_ID})\[\*\] = ({_ID})$"), "arraystore"),
    (re.compile(rf"^(?:({_ID}) = )?({_DOTTED})\.({_ID})\(([^)]*)\)$"), "call"),
    (re.compile(rf"^({_ID}) = ({_ID})\.({_ID})$"), "load"),
    (re.compile(rf"^({_ID})\.({_ID}) = ({_ID})$"), "store"),
    (re.compile(rf"^if \* goto ({_ID})$"), "branch"),
    (re.compile(rf"^goto ({_ID})$"), "goto"),
    (re.compile(rf"^({_ID}):$"), "label"),
    (re.compile(rf"^return(?: ({_ID}))?$"), "return"),
    (re.compile(rf"^({_ID}) = ({_ID})$"), "copy"),
]


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out).strip()


@dataclass
class _RawMethod:
    header: re.Match
    header_line: int
    var_decls: List[Tuple[str, str, int]]
    stmts: List[Tuple[str, int]]  # raw text, line number
    body_kind: str


def parse_program(text: str) -> ProgramModel:
    """Parse IR source text into a ProgramModel.

    Raises IrError with codes: syntax, dup-class, dup-field, dup-method,
    dup-label, unknown-type, undeclared-var, nested-array, inherit-cycle,
    bad-supertype, interface-body.
    """
    lines = text.splitlines()
    classes: Dict[str, dict] = {}
    order: List[str] = []

    cur_class: Optional[dict] = None
    cur_method: Optional[_RawMethod] = None

    for lineno, raw in enumerate(lines, start=1):
        ln = _strip_comment(raw)
        if not ln:
            continue

        if cur_method is not None:
            if ln == "}":
                cur_class["methods"].append(cur_method)
                cur_method = None
            elif m := _RE_VAR.match(ln):
                if cur_method.stmts:
                    raise IrError("syntax", "var declaration after statements", lineno)
                cur_method.var_decls.append((m.group(1), m.group(2), lineno))
            else:
                cur_method.stmts.append((ln, lineno))
            continue

        if cur_class is not None:
            if ln == "}":
                cur_class = None
                continue
            if m := _RE_FIELD.match(ln):
                if cur_class["is_interface"]:
                    raise IrError("interface-body", "interfaces cannot declare fields", lineno)
                cur_class["fields"].append((m.group(1), m.group(2), lineno))
                continue
            if m := _RE_METHOD.match(ln):
                tail = m.group(6).replace(" ", "")
                if tail == "{":
                    if cur_class["is_interface"]:
                        raise IrError(
                            "interface-body", "interface methods must be unmodeled", lineno
                        )
                    cur_method = _RawMethod(m, lineno, [], [], "code")
                else:
                    kind = {"{}": "code", "unmodeled": "unmodeled", "native": "native"}[tail]
                    if kind == "code" and cur_class["is_interface"]:
                        raise IrError(
                            "interface-body", "interface methods must be unmodeled", lineno
                        )
                    cur_class["methods"].append(_RawMethod(m, lineno, [], [], kind))
                continue
            raise IrError("syntax", f"unrecognized line in class body: {ln!r}", lineno)

        if m := _RE_CLASS.match(ln):
            kw, name, ext, impl, closed = m.groups()
            if name in classes:
                raise IrError("dup-class", f"duplicate class {name}", lineno)
            is_interface = kw == "interface"
            if is_interface and impl:
                raise IrError("syntax", "interfaces use extends, not implements", lineno)
            cur_class = {
                "name": name,
                "line": lineno,
                "is_interface": is_interface,
                "extends": [s.strip() for s in ext.split(",")] if ext else [],
                "implements": [s.strip() for s in impl.split(",")] if impl else [],
                "fields": [],
                "methods": [],
            }
            if not is_interface and len(cur_class["extends"]) > 1:
                raise IrError("syntax", "classes extend a single superclass", lineno)
            classes[name] = cur_class
            order.append(name)
            if closed:
                cur_class = None
            continue

        raise IrError("syntax", f"unrecognized top-level line: {ln!r}", lineno)

    if cur_method is not None or cur_class is not None:
        raise IrError("syntax", "unexpected end of input (unclosed block)", len(lines))

    return _build_model(classes, order)


def _build_model(raw_classes: Dict[str, dict], order: List[str]) -> ProgramModel:
    for bi in BUILTIN_TYPES:
        if bi not in raw_classes:
            raw_classes[bi] = {
                "name": bi,
                "line": 0,
                "is_interface": False,
                "extends": [] if bi == OBJECT else [OBJECT],
                "implements": [],
                "fields": [],
                "methods": [],
                "builtin": True,
            }
            order.append(bi)

    def check_type(t: str, lineno: int, allow_array: bool = True) -> None:
        base = t
        if t.endswith("[]"):
            if not allow_array:
                raise IrError("nested-array", f"array type not allowed here: {t}", lineno)
            base = t[:-2]
            if base.endswith("[]"):
                raise IrError("nested-array", f"nested array type {t}", lineno)
        if base != VOID and base not in raw_classes:
            raise IrError("unknown-type", f"unknown type {base}", lineno)

    # hierarchy sanity: declared supertypes, kinds, acyclicity
    for name in order:
        rc = raw_classes[name]
        sups = rc["extends"] + rc["implements"]
        for s in sups:
            if s not in raw_classes:
                raise IrError("unknown-type", f"unknown supertype {s}", rc["line"])
        if not rc["is_interface"]:
            for s in rc["extends"]:
                if raw_classes[s]["is_interface"]:
                    raise IrError("bad-supertype", f"class {name} extends interface {s}", rc["line"])
            for s in rc["implements"]:
                if not raw_classes[s]["is_interface"]:
                    raise IrError("bad-supertype", f"{name} implements class {s}", rc["line"])
        else:
            for s in rc["extends"]:
                if not raw_classes[s]["is_interface"]:
                    raise IrError("bad-supertype", f"interface {name} extends class {s}", rc["line"])

    color: Dict[str, int] = {}

    def visit(n: str, trail: Tuple[str, ...]) -> None:
        if color.get(n) == 2:
            return
        if color.get(n) == 1:
            raise IrError("inherit-cycle", f"inheritance cycle through {n}", raw_classes[n]["line"])
        color[n] = 1
        for s in raw_classes[n]["extends"] + raw_classes[n]["implements"]:
            visit(s, trail + (n,))
        color[n] = 2

    for name in order:
        visit(name, ())

    site = 0
    classes: Dict[str, ClassModel] = {}
    methods: Dict[str, MethodModel] = {}
    site_index: Dict[int, Tuple[str, Stmt]] = {}

    for name in order:
        rc = raw_classes[name]
        flds: List[Tuple[str, str]] = []
        seen_fields: Set[str] = set()
        for fname, ftype, lno in rc["fields"]:
            if fname in seen_fields:
                raise IrError("dup-field", f"duplicate field {name}.{fname}", lno)
            seen_fields.add(fname)
            check_type(ftype, lno)
            flds.append((fname, ftype))

        mm: List[MethodModel] = []
        seen_sigs: Set[Tuple[str, Tuple[str, ...]]] = set()
        for rawm in rc["methods"]:
            h = rawm.header
            is_static = h.group(1) is not None
            visibility = (h.group(2) or " public").strip()
            mname = h.group(3)
            params: List[Tuple[str, str]] = []
            if h.group(4).strip():
                for part in h.group(4).split(","):
                    v, _, t = part.partition(":")
                    v, t = v.strip(), t.strip()
                    check_type(t, rawm.header_line)
                    params.append((v, t))
            ret = h.group(5)
            if ret != VOID:
                check_type(ret, rawm.header_line)
            sig = (mname, tuple(t for _, t in params))
            if sig in seen_sigs:
                raise IrError("dup-method", f"duplicate method {name}.{mname}", rawm.header_line)
            seen_sigs.add(sig)

            local_types: Dict[str, str] = dict(params)
            local_decls: List[Tuple[str, str]] = []
            for v, t, lno in rawm.var_decls:
                if v in local_types:
                    raise IrError("undeclared-var", f"variable {v} declared twice", lno)
                check_type(t, lno)
                local_types[v] = t
                local_decls.append((v, t))

            body: List[Stmt] = []
            labels: Set[str] = set()
            if rawm.body_kind == "code":
                for textline, lno in rawm.stmts:
                    site += 1
                    stmt = _parse_stmt(textline, lno, site, local_types, raw_classes)
                    if isinstance(stmt, Label):
                        if stmt.name in labels:
                            raise IrError("dup-label", f"duplicate label {stmt.name}", lno)
                        labels.add(stmt.name)
                    body.append(stmt)

            model = MethodModel(
                owner=name,
                name=mname,
                params=tuple(params),
                return_type=ret,
                is_static=is_static,
                visibility=visibility,
                body_kind=rawm.body_kind,
                body=tuple(body),
                locals=tuple(local_decls),
            )
            mm.append(model)
            methods[model.key] = model
            for s in model.body:
                site_index[s.site] = (model.key, s)

        classes[name] = ClassModel(
            name=name,
            superclass=None if name == OBJECT else (rc["extends"][0] if rc["extends"] and not rc["is_interface"] else (OBJECT if not rc["is_interface"] else None)),
            interfaces=tuple(rc["extends"] if rc["is_interface"] else rc["implements"]),
            fields=tuple(flds),
            methods=tuple(mm),
            is_interface=rc["is_interface"],
            builtin=rc.get("builtin", False),
        )

    return ProgramModel(classes=classes, methods=methods, site_index=site_index)


def _parse_stmt(
    text: str,
    lineno: int,
    site: int,
    local_types: Dict[str, str],
    raw_classes: Dict[str, dict],
) -> Stmt:
    def need_var(v: Optional[str]) -> None:
        if v is not None and v not in local_types:
            raise IrError("undeclared-var", f"use of undeclared variable {v}", lineno)

    def check_type(t: str) -> None:
        base = t[:-2] if t.endswith("[]") else t
        if base.endswith("[]"):
            raise IrError("nested-array", f"nested array type {t}", lineno)
        if base not in raw_classes:
            raise IrError("unknown-type", f"unknown type {base}", lineno)

    for rx, kind in _STMT_RES:
        m = rx.match(text)
        if not m:
            continue
        g = m.groups()
        if kind == "alloc":
            check_type(g[1])
            if g[1].endswith("[]"):
                raise IrError("syntax", "use newarray for array allocation", lineno)
            need_var(g[0])
            return Alloc(site, target=g[0], type_name=g[1], line=lineno)
        if kind == "newarray":
            if g[1].endswith("[]"):
                raise IrError("nested-array", f"nested array newarray {g[1]}", lineno)
            check_type(g[1])
            need_var(g[0])
            return ArrayAlloc(site, target=g[0], elem_type=g[1], line=lineno)
        if kind == "strconst":
            need_var(g[0])
            return StringConst(site, target=g[0], text=g[1], line=lineno)
        if kind == "unknownstring":
            need_var(g[0])
            return UnknownString(site, target=g[0], line=lineno)
        if kind == "null":
            need_var(g[0])
            return NullAssign(site, target=g[0], line=lineno)
        if kind == "cast":
            check_type(g[1])
            need_var(g[0])
            need_var(g[2])
            return Cast(site, target=g[0], type_name=g[1], source=g[2], line=lineno)
        if kind == "forname":
            need_var(g[0])
            need_var(g[1])
            return ForName(site, target=g[0], name_var=g[1], line=lineno)
        if kind == "newinstance":
            need_var(g[0])
            need_var(g[1])
            return NewInstance(site, target=g[0], base=g[1], line=lineno)
        if kind == "getmethod":
            tgt, base, which, namev, lits = g
            need_var(tgt)
            need_var(base)
            need_var(namev)
            if lits is None:
                type_lits: Optional[Tuple[str, ...]] = ()
            elif lits == "unknown":
                type_lits = None
            else:
                inner = lits[1:-1].strip()
                type_lits = tuple(s.strip() for s in inner.split(",")) if inner else ()
                for t in type_lits:
                    check_type(t)
            return GetMethod(
                site,
                target=tgt,
                base=base,
                name_var=namev,
                type_lits=type_lits,
                declared_only=which == "getDeclaredMethod",
                line=lineno,
            )
        if kind == "getmethods":
            need_var(g[0])
            need_var(g[1])
            return GetMethods(
                site,
                target=g[0],
                base=g[1],
                declared_only=g[2] == "getDeclaredMethods",
                line=lineno,
            )
        if kind == "invoke":
            tgt, base, recv, args = g
            need_var(tgt)
            need_var(base)
            recv_v = None if recv == "null" else recv
            args_v = None if args == "null" else args
            need_var(recv_v)
            need_var(args_v)
            return Invoke(site, target=tgt, base=base, recv=recv_v, args_var=args_v, line=lineno)
        if kind == "arrayload":
            need_var(g[0])
            need_var(g[1])
            return ArrayLoad(site, target=g[0], base=g[1], line=lineno)
        if kind == "arraystore":
            need_var(g[0])
            need_var(g[1])
            return ArrayStore(site, base=g[0], source=g[1], line=lineno)
        if kind == "call":
            tgt, recv, mname, argstr = g
            need_var(tgt)
            args = tuple(a.strip() for a in argstr.split(",")) if argstr.strip() else ()
            for a in args:
                need_var(a)
            if recv in local_types:
                return VirtualCall(
                    site, target=tgt, base=recv, method_name=mname, args=args, line=lineno
                )
            if recv in raw_classes:
                return StaticCall(
                    site, target=tgt, class_name=recv, method_name=mname, args=args, line=lineno
                )
            if "." in recv:
                raise IrError("unknown-type", f"unknown class {recv} in static call", lineno)
            raise IrError("undeclared-var", f"call receiver {recv} is not declared", lineno)
        if kind == "load":
            need_var(g[0])
            need_var(g[1])
            return Load(site, target=g[0], base=g[1], field_name=g[2], line=lineno)
        if kind == "store":
            need_var(g[0])
            need_var(g[2])
            return Store(site, base=g[0], field_name=g[1], source=g[2], line=lineno)
        if kind == "branch":
            return Branch(site, label=g[0], line=lineno)
        if kind == "goto":
            return Goto(site, label=g[0], line=lineno)
        if kind == "label":
            return Label(site, name=g[0], line=lineno)
        if kind == "return":
            need_var(g[0])
            return Return(site, value=g[0], line=lineno)
        if kind == "copy":
            need_var(g[0])
            need_var(g[1])
            return Copy(site, target=g[0], source=g[1], line=lineno)
    raise IrError("syntax", f"unrecognized statement: {text!r}", lineno)


# ---------------------------------------------------------------------------
# Pretty-printing (canonical form; parse o print o parse is identity)
# ---------------------------------------------------------------------------


def _stmt_text(s: Stmt) -> str:
    if isinstance(s, Alloc):
        return f"{s.target} = new {s.type_name}"
    if isinstance(s, ArrayAlloc):
        return f"{s.target} = newarray {s.elem_type}"
    if isinstance(s, Copy):
        return f"{s.target} = {s.source}"
    if isinstance(s, Load):
        return f"{s.target} = {s.base}.{s.field_name}"
    if isinstance(s, Store):
        return f"{s.base}.{s.field_name} = {s.source}"
    if isinstance(s, ArrayLoad):
        return f"{s.target} = {s.base}[*]"
    if isinstance(s, ArrayStore):
        return f"{s.base}[*] = {s.source}"
    if isinstance(s, StringConst):
        return f'{s.target} = "{s.text}"'
    if isinstance(s, UnknownString):
        return f"{s.target} = unknownstring"
    if isinstance(s, NullAssign):
        return f"{s.target} = null"
    if isinstance(s, Cast):
        return f"{s.target} = ({s.type_name}) {s.source}"
    if isinstance(s, VirtualCall):
        pre = f"{s.target} = " if s.target else ""
        return f"{pre}{s.base}.{s.method_name}({', '.join(s.args)})"
    if isinstance(s, StaticCall):
        pre = f"{s.target} = " if s.target else ""
        return f"{pre}{s.class_name}.{s.method_name}({', '.join(s.args)})"
    if isinstance(s, ForName):
        return f"{s.target} = Class.forName({s.name_var})"
    if isinstance(s, NewInstance):
        return f"{s.target} = {s.base}.newInstance()"
    if isinstance(s, GetMethod):
        which = "getDeclaredMethod" if s.declared_only else "getMethod"
        if s.type_lits is None:
            lits = ", unknown"
        elif s.type_lits:
            lits = ", [" + ", ".join(s.type_lits) + "]"
        else:
            lits = ", []"
        return f"{s.target} = {s.base}.{which}({s.name_var}{lits})"
    if isinstance(s, GetMethods):
        which = "getDeclaredMethods" if s.declared_only else "getMethods"
        return f"{s.target} = {s.base}.{which}()"
    if isinstance(s, Invoke):
        pre = f"{s.target} = " if s.target else ""
        return f"{pre}{s.base}.invoke({s.recv or 'null'}, {s.args_var or 'null'})"
    if isinstance(s, Branch):
        return f"if * goto {s.label}"
    if isinstance(s, Goto):
        return f"goto {s.label}"
    if isinstance(s, Label):
        return f"{s.name}:"
    if isinstance(s, Return):
        return f"return {s.value}" if s.value else "return"
    raise TypeError(f"unknown statement {s!r}")


def program_to_text(prog: ProgramModel) -> str:
    out: List[str] = []
    for name, cls in prog.classes.items():
        if cls.builtin:
            continue
        kw = "interface" if cls.is_interface else "class"
        head = f"{kw} {name}"
        if cls.is_interface:
            if cls.interfaces:
                head += " extends " + ", ".join(cls.interfaces)
        else:
            if cls.superclass and cls.superclass != OBJECT:
                head += f" extends {cls.superclass}"
            if cls.interfaces:
                head += " implements " + ", ".join(cls.interfaces)
        out.append(head + " {")
        for fname, ftype in cls.fields:
            out.append(f"  field {fname} : {ftype}")
        for m in cls.methods:
            mods = ("static " if m.is_static else "") + (
                "nonpublic " if m.visibility == "nonpublic" else "public "
            )
            params = ", ".join(f"{v}: {t}" for v, t in m.params)
            head = f"  method {mods}{m.name}({params}) : {m.return_type}"
            if m.body_kind != "code":
                out.append(f"{head} {m.body_kind}")
                continue
            out.append(head + " {")
            for v, t in m.locals:
                out.append(f"    var {v}: {t}")
            for s in m.body:
                out.append(f"    {_stmt_text(s)}")
            out.append("  }")
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Control-flow graphs and the post-dominating-cast query
# ---------------------------------------------------------------------------


@dataclass
class Cfg:
    """Per-method CFG over statement positions, with one synthetic EXIT node."""

    stmts: Tuple[Stmt, ...]
    succ: Dict[int, Tuple[int, ...]]
    unreachable_exit: Tuple[int, ...]  # nodes that cannot reach EXIT

    @property
    def nodes(self) -> List[int]:
        return list(range(len(self.stmts)))

    def pred(self) -> Dict[int, List[int]]:
        p: Dict[int, List[int]] = {n: [] for n in self.nodes}
        p[EXIT] = []
        for n, ss in self.succ.items():
            for s in ss:
                p[s].append(n)
        return p


def build_cfg(method: MethodModel) -> Cfg:
    """Build the CFG of a `code` body. Raises IrError("bad-goto") on undefined labels."""
    assert method.has_code, "buildCfg requires a statement-list body"
    stmts = method.body
    labels: Dict[str, int] = {
        s.name: i for i, s in enumerate(stmts) if isinstance(s, Label)
    }
    succ: Dict[int, Tuple[int, ...]] = {}
    n = len(stmts)
    for i, s in enumerate(stmts):
        nxt = i + 1 if i + 1 < n else EXIT
        if isinstance(s, Return):
            succ[i] = (EXIT,)
        elif isinstance(s, Goto):
            if s.label not in labels:
                raise IrError("bad-goto", f"goto to undefined label {s.label}", s.line)
            succ[i] = (labels[s.label],)
        elif isinstance(s, Branch):
            if s.label not in labels:
                raise IrError("bad-goto", f"branch to undefined label {s.label}", s.line)
            succ[i] = (nxt, labels[s.label])
        else:
            succ[i] = (nxt,)

    # nodes that can reach EXIT (the rest are reported, not rejected)
    preds = {n_: [] for n_ in list(range(n)) + [EXIT]}
    for i, ss in succ.items():
        for t in ss:
            preds[t].append(i)
    reach: Set[int] = set()
    work = [EXIT]
    while work:
        x = work.pop()
        for p in preds[x]:
            if p not in reach:
                reach.add(p)
                work.append(p)
    dead = tuple(i for i in range(n) if i not in reach)
    if dead:
        logger.warning("%s: nodes %s cannot reach exit", method.key, dead)
    return Cfg(stmts=stmts, succ=succ, unreachable_exit=dead)


def _post_dominators(cfg: Cfg, start: int) -> Dict[int, Set[int]]:
    """Set-based post-dominators restricted to nodes reachable from `start`."""
    region: Set[int] = set()
    work = [start]
    while work:
        x = work.pop()
        if x in region or x == EXIT:
            continue
        region.add(x)
        work.extend(cfg.succ[x])
    allnodes = region | {EXIT}
    pdom: Dict[int, Set[int]] = {n: set(allnodes) for n in region}
    pdom[EXIT] = {EXIT}
    changed = True
    while changed:
        changed = False
        for n in sorted(region, reverse=True):
            succs = [s for s in cfg.succ[n] if s in allnodes]
            if not succs:
                new = {n}
            else:
                inter = set(pdom[succs[0]])
                for s in succs[1:]:
                    inter &= pdom[s]
                new = inter | {n}
            if new != pdom[n]:
                pdom[n] = new
                changed = True
    return pdom


def _value_holders(cfg: Cfg, start: int) -> Dict[int, Set[str]]:
    """For each node reachable from `start`, the variables guaranteed (on all
    paths from `start`) to still hold the value defined at `start`.

    Must-analysis: copies and casts propagate the value, any other definition
    kills it. Re-executing `start` re-establishes its own target.
    """
    src = cfg.stmts[start]
    seed = stmt_target(src)
    assert seed is not None
    region: Set[int] = set()
    work = [start]
    while work:
        x = work.pop()
        if x in region or x == EXIT:
            continue
        region.add(x)
        work.extend(cfg.succ[x])

    TOP = None  # unvisited: intersection identity
    before: Dict[int, Optional[Set[str]]] = {n: TOP for n in region}

    def transfer(i: int, s_in: Set[str]) -> Set[str]:
        if i == start:
            return {seed}
        st = cfg.stmts[i]
        out = set(s_in)
        if isinstance(st, (Copy, Cast)):
            if st.source in out:
                out.add(st.target)
            else:
                out.discard(st.target)
        else:
            t = stmt_target(st)
            if t is not None:
                out.discard(t)
        return out

    # the value exists right after `start`; intersect at joins until stable
    after_start = {seed}
    pending = [(nxt, after_start) for nxt in cfg.succ[start] if nxt != EXIT]
    while pending:
        node, incoming = pending.pop()
        cur = before[node]
        new = set(incoming) if cur is TOP else (cur & incoming)
        if cur is not TOP and new == cur:
            continue
        before[node] = new
        out = transfer(node, new)
        for nxt in cfg.succ[node]:
            if nxt != EXIT and nxt in region:
                pending.append((nxt, out))
    return {n: (s if s is not TOP else set()) for n, s in before.items()}


def post_dominating_cast(method: MethodModel, site: int) -> str:
    """Type of the nearest cast that post-dominates `site` and whose operand is
    copy-reachable from the value defined at `site`; java.lang.Object otherwise.
    """
    if not method.has_code:
        return OBJECT
    idx = next((i for i, s in enumerate(method.body) if s.site == site), None)
    assert idx is not None, f"site {site} is not in {method.key}"
    if stmt_target(method.body[idx]) is None:
        return OBJECT
    cfg = build_cfg(method)
    if idx in cfg.unreachable_exit:
        return OBJECT
    pdom = _post_dominators(cfg, idx)
    holders = _value_holders(cfg, idx)
    chain = [p for p in pdom[idx] if p not in (idx, EXIT)]
    chain.sort(key=lambda p: -len(pdom[p]))  # nearest to `site` first
    for p in chain:
        st = cfg.stmts[p]
        if isinstance(st, Cast) and st.type_name != OBJECT:
            if st.source in holders.get(p, set()):
                return st.type_name
    return OBJECT
