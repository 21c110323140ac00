"""Certificate tightening: last-use indices and dead-derivation pruning.

``compute_last_use`` scans every derivation's references and stamps each
derivation with the largest index of any later derivation that references it
(or -1 when never referenced), so the checker can evict rows early and keep
peak memory at the number of simultaneously live rows. Original constraints
carry no last-use slot and are never evicted.

``prune_unused`` keeps exactly the derivations backward-reachable from the
goal-proving empty-assumption derivations (through combination terms and all
four unsplit references), renumbers the combined index space contiguously,
rewrites references, and recomputes last-use indices. It is defined only for
certificates that verify.

``tighten`` composes the two; the result is idempotent and verification-
preserving, and replaying the checker with eviction on a tightened
certificate never touches an evicted row.
"""

from __future__ import annotations

from dataclasses import replace

from .checker import verify_certificate
from .model import (
    KEEP_UNTIL_END,
    Asm,
    Certificate,
    Derivation,
    Lin,
    Reason,
    Rnd,
    Uns,
)

__all__ = ["compute_last_use", "prune_unused", "tighten"]


def _references(reason: Reason) -> tuple[int, ...]:
    if isinstance(reason, (Lin, Rnd)):
        return tuple(index for index, _ in reason.terms)
    if isinstance(reason, Uns):
        return (reason.i1, reason.a1, reason.i2, reason.a2)
    return ()


def compute_last_use(certificate: Certificate) -> Certificate:
    """Fill in every derivation's last_use; all other content is unchanged.

    A derivation's last_use becomes the largest combined index among the
    derivations referencing it, or -1 when nothing references it.
    """
    num_original = certificate.num_original
    last_use = [KEEP_UNTIL_END] * len(certificate.derivations)
    for position, derivation in enumerate(certificate.derivations):
        own_index = num_original + position
        for reference in _references(derivation.reason):
            if reference >= num_original:
                target = reference - num_original
                last_use[target] = max(last_use[target], own_index)
    derivations = tuple(
        replace(derivation, last_use=last_use[position])
        for position, derivation in enumerate(certificate.derivations)
    )
    return replace(certificate, derivations=derivations)


def prune_unused(certificate: Certificate) -> Certificate:
    """Drop derivations not needed for the goal proof; renumber the rest.

    Keeps the derivations backward-reachable from all goal-proving
    empty-assumption derivations, rewrites references into the compacted
    combined index space, and recomputes last_use. Raises ValueError when the
    certificate does not verify (pruning is only defined for valid input).
    """
    report = verify_certificate(certificate)
    if not report.verified:
        failure = report.failure
        msg = f"cannot prune a certificate that does not verify ({failure.rule}: {failure.message})"
        raise ValueError(msg)

    num_original = certificate.num_original
    needed: set[int] = set()
    stack = [index for index in report.goal_proven_by]
    while stack:
        index = stack.pop()
        if index in needed or index < num_original:
            continue
        needed.add(index)
        derivation = certificate.derivations[index - num_original]
        stack.extend(_references(derivation.reason))

    kept_old_indices = sorted(needed)
    new_index: dict[int, int] = {old: old for old in range(num_original)}
    for position, old in enumerate(kept_old_indices):
        new_index[old] = num_original + position

    derivations = []
    for old in kept_old_indices:
        derivation = certificate.derivations[old - num_original]
        reason = derivation.reason
        if isinstance(reason, (Lin, Rnd)):
            terms = tuple((new_index[ref], mult) for ref, mult in reason.terms)
            reason = Lin(terms) if isinstance(reason, Lin) else Rnd(terms)
        elif isinstance(reason, Uns):
            reason = Uns(
                new_index[reason.i1],
                new_index[reason.a1],
                new_index[reason.i2],
                new_index[reason.a2],
            )
        derivations.append(
            Derivation(derivation.constraint, reason, last_use=KEEP_UNTIL_END)
        )
    pruned = replace(certificate, derivations=tuple(derivations))
    return compute_last_use(pruned)


def tighten(certificate: Certificate, *, prune: bool = False) -> Certificate:
    """Tighten a certificate: optional pruning, then last-use fill-in."""
    if prune:
        return prune_unused(certificate)
    return compute_last_use(certificate)
