"""Lexer, parser, printer and scope resolution for the C subset."""
from .nodes import *  # noqa: F401,F403
from .nodes import Ast
from .parser import ParseError, parse, parse_source
from .printer import print_ast, print_expr
from .tokens import LexError, Token, tokenize, untokenize
