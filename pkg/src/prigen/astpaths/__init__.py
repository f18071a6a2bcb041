"""Java-subset parsing and AST path-context extraction."""
from .lexer import Token, tokenize
from .parser import NODE_KINDS, Ast, Node, parse_java_method
from .paths import (DEFAULT_MAX_CONTEXTS, DEFAULT_MAX_LENGTH, DEFAULT_MAX_WIDTH, PathContext,
                    extract_paths, loc_count, path_between, subtokenize)

__all__ = [
    "Ast", "DEFAULT_MAX_CONTEXTS", "DEFAULT_MAX_LENGTH", "DEFAULT_MAX_WIDTH", "NODE_KINDS",
    "Node", "PathContext", "Token", "extract_paths", "loc_count", "parse_java_method",
    "path_between", "subtokenize", "tokenize",
]
