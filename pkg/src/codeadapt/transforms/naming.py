from __future__ import annotations

import random
from dataclasses import replace

from ..lang.nodes import Ast, Call, Declarator, FunctionDef, Ident, Opaque, Param, TranslationUnit, rewrite
from ..lang.scope import opaque_identifiers, resolve
from .base import Operator, register
from .util import FreshNames


@register
class ChangeName(Operator):
    """Rename functions, parameters and variables to fresh ``v<n>`` names.

    Each declaration gets its own fresh name, so shadowed declarations stay
    distinct and no use can be captured. ``main``, functions never called
    inside the unit (entry points reached from outside) and any name
    spelled inside opaque code are left alone.
    """

    id = 1
    name = "changeName"
    description = "Rename functions and variables to fresh names"

    def sites(self, ast: Ast) -> list[int]:
        pinned = {"main"}
        for node in ast.nodes:
            if isinstance(node, Opaque):
                pinned |= opaque_identifiers(node)
        called = {n.name for n in ast.nodes if isinstance(n, Call)}
        fn_counts: dict[str, int] = {}
        for item in ast.root.items:
            if isinstance(item, FunctionDef):
                fn_counts[item.name] = fn_counts.get(item.name, 0) + 1
        out = []
        for nid, node in enumerate(ast.nodes):
            if isinstance(node, (Declarator, Param)):
                if node.name not in pinned:
                    out.append(nid)
            elif isinstance(node, FunctionDef):
                if node.name not in pinned and node.name in called and fn_counts[node.name] == 1:
                    out.append(nid)
        return out

    def transform(self, ast: Ast, sites: list[int], rng: random.Random) -> TranslationUnit:
        order = list(sites)
        rng.shuffle(order)
        fresh = FreshNames(ast)
        new_names = {nid: fresh.take("v") for nid in order}
        res = resolve(ast)

        targets = {}
        for nid in sites:
            targets[nid] = _renamer(new_names[nid])
        for use, decl in res.uses.items():
            if decl in new_names:
                targets[use] = _renamer(new_names[decl])
        return rewrite(ast.root, targets)


def _renamer(name: str):
    def fn(node, nid):
        if isinstance(node, (Ident, Call, Declarator, Param, FunctionDef)):
            return replace(node, name=name)
        return node
    return fn
