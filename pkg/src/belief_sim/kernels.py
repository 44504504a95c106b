"""Hot sampling loops, shared by every algorithm.

All functions here are written against the flat array form of a network
(see ``network.FlatNetwork``) in nopython-compatible style and compiled
with numba unless the ``BELIEF_SIM_NUMBA`` flag disables it. The
uncompiled functions are the fallback path; results are bit-identical
either way because no fast-math or reassociation is allowed.

Randomness enters only through pre-drawn uniform arrays, one row per
iteration: a forward iteration consumes ``u[pos]`` at each topological
position that actually samples, a chain step consumes ``u[0]`` (node
choice) and ``u[1]`` (state choice). Keeping the layout fixed makes runs
reproducible and lets the pure-Python reference samplers replay the same
stream.
"""

from __future__ import annotations

import numpy as np

from ._jit import NUMBA_ENABLED, njit


def _row_index(j, x, parents_off, parents_flat, cards):
    """CPT row of node ``j`` under assignment ``x`` (last parent fastest)."""
    row = 0
    for t in range(parents_off[j], parents_off[j + 1]):
        p = parents_flat[t]
        row = row * cards[p] + x[p]
    return row


def _pick_state(u, base, card, dist):
    """Inverse-CDF draw from ``dist[base : base + card]``.

    Zero-probability states are never selected; the trailing fallback
    guards against the cumulative sum landing below 1 in floating point.
    """
    c = 0.0
    last = 0
    for s in range(card):
        p = dist[base + s]
        if p > 0.0:
            last = s
            c += p
            if u < c:
                return s
    return last


def _blanket_weights(
    j, x, cards, parents_off, parents_flat, children_off, children_flat,
    cpt_off, cpt_flat, w,
):
    """Unnormalized Markov-blanket conditional of node ``j`` at ``x``.

    ``w[y] = P(y | parents(j)) * prod_children P(x_child | ..., X_j=y)``
    for every state ``y``; returns the sum (0 means degenerate blanket).
    """
    card = cards[j]
    row = _row_index(j, x, parents_off, parents_flat, cards)
    base = cpt_off[j] + row * card
    saved = x[j]
    total = 0.0
    for y in range(card):
        f = cpt_flat[base + y]
        if f > 0.0:
            x[j] = y
            for t in range(children_off[j], children_off[j + 1]):
                k = children_flat[t]
                krow = _row_index(k, x, parents_off, parents_flat, cards)
                f *= cpt_flat[cpt_off[k] + krow * cards[k] + x[k]]
                if f == 0.0:
                    break
        w[y] = f
        total += f
    x[j] = saved
    return total


def _forward_pass(
    topo, cards, parents_off, parents_flat, cpt_off, cpt_flat, samp_flat,
    ev_state, clamp, u_row, x, rowbuf,
):
    """One topological sampling sweep.

    Evidence nodes are clamped when ``clamp`` is set, otherwise sampled
    like any other node. Non-evidence (and unclamped) nodes draw from
    ``samp_flat``, which equals ``cpt_flat`` except under importance
    sampling. Returns ``(ev_like, ratio)`` where ``ev_like`` is the
    product of clamped-evidence CPT factors and ``ratio`` the product of
    true-over-selection probabilities of the sampled nodes.
    """
    ev_like = 1.0
    ratio = 1.0
    for pos in range(len(topo)):
        j = topo[pos]
        row = _row_index(j, x, parents_off, parents_flat, cards)
        rowbuf[j] = row
        base = cpt_off[j] + row * cards[j]
        if clamp and ev_state[j] >= 0:
            x[j] = ev_state[j]
            ev_like *= cpt_flat[base + x[j]]
        else:
            s = _pick_state(u_row[pos], base, cards[j], samp_flat)
            x[j] = s
            ratio *= cpt_flat[base + s] / samp_flat[base + s]
    return ev_like, ratio


def forward_chunk(
    iters, topo, cards, parents_off, parents_flat, children_off, children_flat,
    cpt_off, cpt_flat, samp_flat, ev_state, clamp, indicator, mb_mask,
    uniforms, x, rowbuf, w, scores, counts, si_cells, si_enabled, acc,
):
    """Run ``iters`` forward-sampling iterations, accumulating scores.

    ``indicator`` selects logic-sampling scoring (Z = 1 iff the sampled
    evidence matches); otherwise Z is the evidence likelihood times the
    importance ratio. Nodes flagged in ``mb_mask`` receive Markov-blanket
    scoring: the sample's weight is spread over all their states in
    proportion to the blanket conditional, with a unit-weight fallback on
    the sampled state if every substitution hits a zero factor.

    Accumulators: ``scores[j, s]`` per node and state, ``counts[j]``
    scored emissions per node, ``acc = (sum Z, sum Z^2, samples)``. When
    ``si_enabled``, each sample also adds Z into the realized
    (node, parent-row, state) cell of ``si_cells``.
    """
    n = len(topo)
    for it in range(iters):
        ev_like, ratio = _forward_pass(
            topo, cards, parents_off, parents_flat, cpt_off, cpt_flat,
            samp_flat, ev_state, clamp, uniforms[it], x, rowbuf,
        )
        if indicator:
            z = 1.0
            for j in range(n):
                if ev_state[j] >= 0 and x[j] != ev_state[j]:
                    z = 0.0
                    break
        else:
            z = ev_like * ratio

        for j in range(n):
            if ev_state[j] >= 0:
                continue
            if mb_mask[j] and z > 0.0:
                total = _blanket_weights(
                    j, x, cards, parents_off, parents_flat,
                    children_off, children_flat, cpt_off, cpt_flat, w,
                )
                if total > 0.0:
                    for y in range(cards[j]):
                        scores[j, y] += (w[y] / total) * z
                else:
                    scores[j, x[j]] += z
            else:
                scores[j, x[j]] += z
            counts[j] += 1
            if si_enabled:
                si_cells[cpt_off[j] + rowbuf[j] * cards[j] + x[j]] += z

        acc[0] += z
        acc[1] += z * z
        acc[2] += 1.0


def forward_assignment(
    topo, cards, parents_off, parents_flat, cpt_off, cpt_flat, ev_state,
    u_row, x, rowbuf,
):
    """One clamped forward pass into ``x``; returns the evidence likelihood.

    Used to initialize chain states: a return of 0 means the sampled
    configuration is impossible under the evidence (deterministic CPTs)
    and the caller should retry with a fresh uniform row.
    """
    ev_like, _ = _forward_pass(
        topo, cards, parents_off, parents_flat, cpt_off, cpt_flat,
        cpt_flat, ev_state, True, u_row, x, rowbuf,
    )
    return ev_like


def pearl_chunk(
    steps, unobs, cards, parents_off, parents_flat, children_off, children_flat,
    cpt_off, cpt_flat, uniforms, x, w, score_mode, scores, counts, acc,
):
    """Run ``steps`` single-site chain transitions on state ``x``.

    Each step re-instantiates one uniformly chosen unobserved node from
    its normalized Markov-blanket conditional. ``score_mode``: 0 none
    (burn segments of restart schedules), 1 scores the re-instantiated
    state with weight 1, 2 scores the full blanket vector. A degenerate
    all-zero blanket keeps the current state and scores it.
    """
    m = len(unobs)
    for it in range(steps):
        pick = int(uniforms[it, 0] * m)
        if pick >= m:
            pick = m - 1
        j = unobs[pick]
        card = cards[j]
        total = _blanket_weights(
            j, x, cards, parents_off, parents_flat, children_off,
            children_flat, cpt_off, cpt_flat, w,
        )
        if total > 0.0:
            for y in range(card):
                w[y] /= total
            u = uniforms[it, 1]
            c = 0.0
            s = x[j]
            for y in range(card):
                if w[y] > 0.0:
                    s = y
                    c += w[y]
                    if u < c:
                        break
            x[j] = s
            if score_mode == 1:
                scores[j, x[j]] += 1.0
                counts[j] += 1
            elif score_mode == 2:
                for y in range(card):
                    scores[j, y] += w[y]
                counts[j] += 1
        else:
            if score_mode == 1:
                scores[j, x[j]] += 1.0
                counts[j] += 1
            elif score_mode == 2:
                scores[j, x[j]] += 1.0
                counts[j] += 1
        if score_mode != 0:
            acc[0] += 1.0
            acc[1] += 1.0
            acc[2] += 1.0


def score_assignment(
    x, ev_state, cards, parents_off, parents_flat, children_off, children_flat,
    cpt_off, cpt_flat, w, use_blanket, scores, counts, acc,
):
    """Score every unobserved node of a completed chain state.

    Used at restart boundaries: plain scoring puts weight 1 on each
    node's current state; blanket scoring spreads it over states (unit
    fallback when degenerate).
    """
    for j in range(len(cards)):
        if ev_state[j] >= 0:
            continue
        if use_blanket:
            total = _blanket_weights(
                j, x, cards, parents_off, parents_flat, children_off,
                children_flat, cpt_off, cpt_flat, w,
            )
            if total > 0.0:
                for y in range(cards[j]):
                    scores[j, y] += w[y] / total
            else:
                scores[j, x[j]] += 1.0
        else:
            scores[j, x[j]] += 1.0
        counts[j] += 1
    acc[0] += 1.0
    acc[1] += 1.0
    acc[2] += 1.0


def enumerate_marginals(
    cards, ev_state, parents_off, parents_flat, cpt_off, cpt_flat, free, marg,
):
    """Sum joint probabilities over all completions of the evidence.

    Adds P(x) into ``marg[j, x_j]`` for every node and returns the total
    (the evidence probability). ``free`` lists the unobserved node ids;
    the iteration count is the product of their cardinalities.
    """
    n = len(cards)
    x = np.zeros(n, dtype=np.int64)
    for j in range(n):
        if ev_state[j] >= 0:
            x[j] = ev_state[j]
    total = 0.0
    nf = len(free)
    while True:
        p = 1.0
        for j in range(n):
            row = _row_index(j, x, parents_off, parents_flat, cards)
            p *= cpt_flat[cpt_off[j] + row * cards[j] + x[j]]
            if p == 0.0:
                break
        if p > 0.0:
            total += p
            for j in range(n):
                marg[j, x[j]] += p
        k = nf - 1
        while k >= 0:
            f = free[k]
            x[f] += 1
            if x[f] < cards[f]:
                break
            x[f] = 0
            k -= 1
        if k < 0:
            break
    return total


if NUMBA_ENABLED:
    _jit = njit(cache=True, nogil=True)
    _row_index = _jit(_row_index)
    _pick_state = _jit(_pick_state)
    _blanket_weights = _jit(_blanket_weights)
    _forward_pass = _jit(_forward_pass)
    forward_chunk = _jit(forward_chunk)
    forward_assignment = _jit(forward_assignment)
    pearl_chunk = _jit(pearl_chunk)
    score_assignment = _jit(score_assignment)
    enumerate_marginals = _jit(enumerate_marginals)
