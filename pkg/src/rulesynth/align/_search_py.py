"""Exact branch-and-bound search for maximal graph alignment.

Pure-Python twin of ``_search_cy.pyx``; both implement the same algorithm
and must return identical results. Branching assigns each left node a
partner (or none) in a fixed order; edge matches are induced, since at
most one right edge can share a label and both mapped endpoints with a
left edge. The admissible bound adds, per label class, the number of
still-open edges and still-unmatched action nodes that could pair up.

The data-coupling rule (a mapped, unpinned data pair needs an aligned
incident edge) is enforced incrementally: a branch dies as soon as some
mapped data node runs out of open incident edges without a match.
"""

from __future__ import annotations

_OPEN, _DEAD, _SEALED, _MATCHED = 0, 1, 2, 3


def solve_space(space):
    """Return (best_map, best_score); ``best_map[i]`` is the partner index
    or -1. Deterministic for a fixed space."""
    n1, n2 = space.n1, space.n2
    cand = space.cand
    must = space.must_map
    kind1 = space.kind1
    al1, al2 = space.act_label1, space.act_label2
    pinned1 = space.pinned1
    edges1 = space.edges1
    adj1 = space.adj1
    order = space.order

    num_el = space.num_edge_labels
    num_al = space.num_labels

    map1 = [-2] * n1
    used2 = [0] * n2
    ne = len(edges1)
    ends = [(s,) if s == d else (s, d) for s, d, _ in edges1]
    rem = [len(ends[e]) for e in range(ne)]
    status = [_OPEN] * ne

    u1 = [0] * num_el
    for _, _, lab in edges1:
        u1[lab] += 1
    a2 = [0] * num_el
    g2set = set()
    for s, d, lab in space.edges2:
        a2[lab] += 1
        g2set.add((s, d, lab))

    ca1 = [0] * num_al
    ca2 = [0] * num_al
    for i in range(n1):
        if al1[i] >= 0:
            ca1[al1[i]] += 1
    for j in range(n2):
        if al2[j] >= 0:
            ca2[al2[j]] += 1

    cov = [0] * n1
    live = [0] * n1

    # mutable scalars: score, credit_edges, credit_actions, undecD1, availD2
    sc = [0,
          sum(min(u1[l], a2[l]) for l in range(num_el)),
          sum(min(ca1[l], ca2[l]) for l in range(num_al)),
          sum(1 for k in kind1 if k == 0),
          sum(1 for k in space.kind2 if k == 0)]

    arrays = {"m": map1, "u": used2, "r": rem, "t": status, "U": u1,
              "A": a2, "c": ca1, "C": ca2, "v": cov, "l": live, "S": sc}

    def set_val(op, arr, idx, val, trail):
        trail.append((op, idx, arr[idx]))
        arr[idx] = val

    def upd_u1(lab, delta, trail):
        old = min(u1[lab], a2[lab])
        set_val("U", u1, lab, u1[lab] + delta, trail)
        set_val("S", sc, 1, sc[1] + min(u1[lab], a2[lab]) - old, trail)

    def upd_a2(lab, delta, trail):
        old = min(u1[lab], a2[lab])
        set_val("A", a2, lab, a2[lab] + delta, trail)
        set_val("S", sc, 1, sc[1] + min(u1[lab], a2[lab]) - old, trail)

    def upd_ca1(lab, delta, trail):
        old = min(ca1[lab], ca2[lab])
        set_val("c", ca1, lab, ca1[lab] + delta, trail)
        set_val("S", sc, 2, sc[2] + min(ca1[lab], ca2[lab]) - old, trail)

    def upd_ca2(lab, delta, trail):
        old = min(ca1[lab], ca2[lab])
        set_val("C", ca2, lab, ca2[lab] + delta, trail)
        set_val("S", sc, 2, sc[2] + min(ca1[lab], ca2[lab]) - old, trail)

    def decide_edges(i, trail):
        violated = False
        unmapped = map1[i] < 0
        for e in adj1[i]:
            set_val("r", rem, e, rem[e] - 1, trail)
            if status[e] != _OPEN:
                continue
            s, d, lab = edges1[e]
            if unmapped:
                set_val("t", status, e, _DEAD, trail)
                upd_u1(lab, -1, trail)
                for o in ends[e]:
                    if map1[o] >= 0 and kind1[o] == 0:
                        set_val("l", live, o, live[o] - 1, trail)
                        if not pinned1[o] and cov[o] == 0 and live[o] == 0:
                            violated = True
            elif rem[e] == 0:
                partner = (map1[s], map1[d], lab)
                if partner in g2set:
                    set_val("t", status, e, _MATCHED, trail)
                    set_val("S", sc, 0, sc[0] + 1, trail)
                    upd_u1(lab, -1, trail)
                    upd_a2(lab, -1, trail)
                    for o in ends[e]:
                        if map1[o] >= 0 and kind1[o] == 0:
                            set_val("v", cov, o, cov[o] + 1, trail)
                else:
                    set_val("t", status, e, _SEALED, trail)
                    upd_u1(lab, -1, trail)
                    for o in ends[e]:
                        if map1[o] >= 0 and kind1[o] == 0:
                            set_val("l", live, o, live[o] - 1, trail)
                            if not pinned1[o] and cov[o] == 0 and live[o] == 0:
                                violated = True
        return violated

    def assign(i, j):
        trail = []
        set_val("m", map1, i, j, trail)
        if j >= 0:
            set_val("u", used2, j, 1, trail)
            set_val("S", sc, 0, sc[0] + 1, trail)
            if kind1[i] == 1:
                upd_ca1(al1[i], -1, trail)
                upd_ca2(al2[j], -1, trail)
            else:
                set_val("S", sc, 3, sc[3] - 1, trail)
                set_val("S", sc, 4, sc[4] - 1, trail)
                set_val("v", cov, i, 0, trail)
                open_count = sum(1 for e in adj1[i] if status[e] == _OPEN)
                set_val("l", live, i, open_count, trail)
        else:
            if kind1[i] == 1:
                upd_ca1(al1[i], -1, trail)
            else:
                set_val("S", sc, 3, sc[3] - 1, trail)
        violated = decide_edges(i, trail)
        if j >= 0 and kind1[i] == 0 and not pinned1[i] \
                and cov[i] == 0 and live[i] == 0:
            violated = True
        return trail, violated

    def undo(trail):
        for op, idx, old in reversed(trail):
            arrays[op][idx] = old

    best = [-1, None]
    total = len(order)

    def recurse(pos):
        if sc[0] + sc[1] + sc[2] + min(sc[3], sc[4]) <= best[0]:
            return
        if pos == total:
            if sc[0] > best[0]:
                best[0] = sc[0]
                best[1] = map1.copy()
            return
        i = order[pos]
        for j in cand[i]:
            if used2[j]:
                continue
            trail, violated = assign(i, j)
            if not violated:
                recurse(pos + 1)
            undo(trail)
        if not must[i]:
            trail, violated = assign(i, -1)
            if not violated:
                recurse(pos + 1)
            undo(trail)

    recurse(0)
    if best[1] is None:
        return None, -1
    return best[1], best[0]
