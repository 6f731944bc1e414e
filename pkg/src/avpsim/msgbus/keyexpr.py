"""Key expressions: validation, wildcard matching, and remap rules.

Grammar: a key expression is `/`-separated segments. A segment is either a
literal (any characters except `/`, not containing `*`), the single-segment
wildcard `*`, or the multi-segment wildcard `**` which matches zero or more
segments and may appear at most once per expression.
"""

from __future__ import annotations

from dataclasses import dataclass


class KeyExprError(ValueError):
    """Malformed key expression or remap rule."""


def split_segments(expr: str) -> list[str]:
    """Split and validate an expression into segments."""
    if not isinstance(expr, str) or not expr:
        raise KeyExprError("empty key expression")
    segments = expr.split("/")
    star2_seen = False
    for i, seg in enumerate(segments):
        if seg == "":
            raise KeyExprError(f"empty segment at position {i} in {expr!r}")
        if seg in ("*", "**"):
            if seg == "**":
                if star2_seen:
                    raise KeyExprError(f"multiple '**' segments in {expr!r}")
                star2_seen = True
            continue
        if "*" in seg:
            raise KeyExprError(
                f"segment {seg!r} at position {i} in {expr!r} mixes literals with '*'"
            )
    return segments


def validate_pattern(expr: str) -> list[str]:
    """Validate a (possibly wildcarded) pattern, returning its segments."""
    return split_segments(expr)


def validate_key(expr: str) -> list[str]:
    """Validate a literal key: like a pattern but with no wildcards allowed."""
    segments = split_segments(expr)
    for i, seg in enumerate(segments):
        if seg in ("*", "**"):
            raise KeyExprError(f"wildcard segment at position {i} in literal key {expr!r}")
    return segments


def _segment_matches(pat: str, seg: str) -> bool:
    return pat == "*" or pat == seg


def match_segments(pat: list[str], seg: list[str]) -> bool:
    """Wildcard match on pre-validated segment lists (hot path)."""
    if "**" not in pat:
        if len(pat) != len(seg):
            return False
        return all(_segment_matches(p, s) for p, s in zip(pat, seg))
    i = pat.index("**")
    prefix, suffix = pat[:i], pat[i + 1 :]
    if len(seg) < len(prefix) + len(suffix):
        return False
    if not all(_segment_matches(p, s) for p, s in zip(prefix, seg)):
        return False
    tail = seg[len(seg) - len(suffix) :] if suffix else []
    return all(_segment_matches(p, s) for p, s in zip(suffix, tail))


def key_matches(pattern: str, key: str) -> bool:
    """True iff literal `key` is in the language of `pattern`.

    `*` matches exactly one segment; `**` matches zero or more segments.
    """
    return match_segments(validate_pattern(pattern), validate_key(key))


def _wildcard_count(segments: list[str]) -> int:
    return sum(1 for s in segments if s in ("*", "**"))


@dataclass(frozen=True)
class RemapRule:
    """Re-keys envelopes matching `external` by substitution into `internal`.

    The internal template uses `$n` segments referencing the n-th wildcard of
    the external pattern (1-based, in left-to-right order). Each wildcard must
    be referenced exactly once so the rewrite is invertible.
    """

    external: str
    internal: str

    def __post_init__(self) -> None:
        ext = validate_pattern(self.external)
        n_wild = _wildcard_count(ext)
        refs = []
        for i, seg in enumerate(split_segments(self.internal)):
            if seg.startswith("$"):
                try:
                    n = int(seg[1:])
                except ValueError:
                    raise KeyExprError(
                        f"bad placeholder {seg!r} at position {i} in template {self.internal!r}"
                    ) from None
                if not 1 <= n <= n_wild:
                    raise KeyExprError(
                        f"placeholder {seg!r} out of range in template {self.internal!r}: "
                        f"pattern {self.external!r} has {n_wild} wildcard(s)"
                    )
                refs.append(n)
            elif "*" in seg:
                raise KeyExprError(
                    f"wildcard {seg!r} not allowed in remap template {self.internal!r}"
                )
        if sorted(refs) != list(range(1, n_wild + 1)):
            raise KeyExprError(
                f"remap rule {self.external!r} -> {self.internal!r} has mismatched "
                f"wildcard counts ({n_wild} wildcard(s), {len(refs)} distinct reference(s))"
            )

    def captures(self, key: str) -> list[list[str]] | None:
        """Per-wildcard captured segment lists for a matching key, else None."""
        pat = validate_pattern(self.external)
        seg = validate_key(key)
        if not key_matches(self.external, key):
            return None
        caps: list[list[str]] = []
        if "**" not in pat:
            for p, s in zip(pat, seg):
                if p == "*":
                    caps.append([s])
            return caps
        i = pat.index("**")
        prefix, suffix = pat[:i], pat[i + 1 :]
        mid = seg[len(prefix) : len(seg) - len(suffix)] if suffix else seg[len(prefix) :]
        for p, s in zip(prefix, seg):
            if p == "*":
                caps.append([s])
        caps.append(list(mid))
        base = len(seg) - len(suffix)
        for j, p in enumerate(suffix):
            if p == "*":
                caps.append([seg[base + j]])
        return caps

    def apply(self, key: str) -> str | None:
        """Rewritten key for a matching input, or None when it does not match."""
        caps = self.captures(key)
        if caps is None:
            return None
        out: list[str] = []
        for seg in split_segments(self.internal):
            if seg.startswith("$"):
                out.extend(caps[int(seg[1:]) - 1])
            else:
                out.append(seg)
        if not out:
            raise KeyExprError(
                f"remap of {key!r} via {self.external!r} -> {self.internal!r} "
                "produced an empty key"
            )
        return "/".join(out)

    def inverse(self) -> "RemapRule":
        """Rule mapping this rule's outputs back to its inputs."""
        ext = validate_pattern(self.external)
        wilds = [s for s in ext if s in ("*", "**")]
        inv_external: list[str] = []
        order: list[int] = []
        for seg in split_segments(self.internal):
            if seg.startswith("$"):
                n = int(seg[1:])
                order.append(n)
                inv_external.append(wilds[n - 1])
            else:
                inv_external.append(seg)
        inv_internal: list[str] = []
        rank = {n: i + 1 for i, n in enumerate(order)}
        for seg in ext:
            if seg in ("*", "**"):
                n = len([s for s in inv_internal if s.startswith("$")]) + 1
                inv_internal.append(f"${rank[n]}")
            else:
                inv_internal.append(seg)
        return RemapRule("/".join(inv_external), "/".join(inv_internal))
