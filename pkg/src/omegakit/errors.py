"""Exception hierarchy shared by every stage of the front end."""

from __future__ import annotations


class OmegaError(Exception):
    """Base class. ``code`` is the stable identifier printed in diagnostics."""

    code = "Error"

    def __init__(self, message: str, offset: int | None = None, span: tuple[int, int] | None = None):
        super().__init__(message)
        self.message = message
        self.offset = offset
        if span is None and offset is not None:
            span = (offset, offset)
        self.span = span

    def __str__(self) -> str:
        if self.offset is not None:
            return f"{self.message} (at offset {self.offset})"
        return self.message


# -- tag codec ---------------------------------------------------------------

class CodecError(OmegaError):
    code = "CodecError"


class NotReservedRange(CodecError):
    code = "NotReservedRange"


class UnassignedTag(CodecError):
    code = "UnassignedTag"


class InvalidUtf8(CodecError):
    code = "InvalidUtf8"


class MalformedTag(CodecError):
    code = "MalformedTag"


class ReservedInText(CodecError):
    code = "ReservedInText"


# -- header reader -----------------------------------------------------------

class HeaderError(OmegaError):
    code = "HeaderError"


class MalformedHeader(HeaderError):
    code = "MalformedHeader"


class DuplicateSlotKeywords(HeaderError):
    code = "DuplicateSlotKeywords"


class TagInBody(HeaderError):
    code = "TagInBody"


class MissingReceiverMark(HeaderError):
    code = "MissingReceiverMark"


class MultipleReceiverMarks(HeaderError):
    code = "MultipleReceiverMarks"


class OperatorWithManyKeywords(HeaderError):
    code = "OperatorWithManyKeywords"


# -- environment -------------------------------------------------------------

class EnvironmentError_(OmegaError):
    code = "EnvironmentError"


class UnknownParent(EnvironmentError_):
    code = "UnknownParent"


class InheritanceCycle(EnvironmentError_):
    code = "InheritanceCycle"

    def __init__(self, path: list[str]):
        super().__init__("inheritance cycle: " + " -> ".join(path))
        self.path = path


class NameCollision(EnvironmentError_):
    code = "NameCollision"

    def __init__(self, canonical: str, locations: list[str]):
        super().__init__(f"name {canonical!r} is declared more than once: {', '.join(locations)}")
        self.canonical = canonical
        self.locations = locations


class UnknownPrototype(EnvironmentError_):
    code = "UnknownPrototype"


class SlotNotFound(EnvironmentError_):
    code = "SlotNotFound"


class GlyphArityMismatch(EnvironmentError_):
    code = "GlyphArityMismatch"


# -- body parser -------------------------------------------------------------

class ParseError(OmegaError):
    code = "ParseError"


class UnterminatedString(ParseError):
    code = "UnterminatedString"


class DanglingOperator(ParseError):
    code = "DanglingOperator"


class IndeterministicAssociativity(ParseError):
    code = "IndeterministicAssociativity"


class NoInterpretation(ParseError):
    # reported to users as a missing slot: nothing in scope or in the
    # signature tree explains the phrase
    code = "SlotNotFound"


class TrueAmbiguity(ParseError):
    code = "TrueAmbiguity"

    def __init__(self, message: str, interpretations: list | None = None, span=None):
        super().__init__(message, span=span)
        self.interpretations = interpretations or []


class TypeMismatch(ParseError):
    code = "TypeMismatch"


class CallFormMismatch(ParseError):
    code = "CallFormMismatch"


class LiteralOutOfRange(ParseError):
    code = "LiteralOutOfRange"


class UnknownType(ParseError):
    code = "UnknownType"


class NotAssignable(ParseError):
    code = "NotAssignable"


class UnknownTarget(ParseError):
    code = "UnknownTarget"


class ParseErrors(OmegaError):
    """Several independent errors found while parsing one body."""

    code = "ParseErrors"

    def __init__(self, errors: list[OmegaError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


# -- glyphs ------------------------------------------------------------------

class GlyphError(OmegaError):
    code = "GlyphError"


class UnbalancedPushPop(GlyphError):
    code = "UnbalancedPushPop"


class UnknownInstruction(GlyphError):
    code = "UnknownInstruction"


class MissingOutputs(GlyphError):
    code = "MissingOutputs"


class ArityMismatch(GlyphError):
    code = "ArityMismatch"


class NegativeWidth(GlyphError):
    code = "NegativeWidth"
