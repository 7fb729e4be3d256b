# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled episode kernels.

Reimplements the environment step, the three scripted policies, the feature
encoding, and the tree walk in C. Semantics must match kernels.pure exactly;
tests/test_kernels.py compares the two across seeds and behaviors.
"""

import numpy as np

from ..policies import FIXED_NEXT as _fixed_next_dict

# Action codes: 0=N 1=S 2=E 3=W 4=RemoveRubble 5=RescueVictim 6=NoOp.
# Roles: 0=medic 1=engineer. Victim codes: 0 none, 1 open, 2 hidden, 3 rescued.

cdef int FIXED_NEXT[20]
for _r in range(20):
    FIXED_NEXT[_r] = <int>_fixed_next_dict[_r]


cdef inline int room_x(int r) nogil:
    return r & 3


cdef inline int room_y(int r) nogil:
    return r >> 2


cdef inline int man(int a, int b) nogil:
    cdef int dx = room_x(a) - room_x(b)
    cdef int dy = room_y(a) - room_y(b)
    if dx < 0:
        dx = -dx
    if dy < 0:
        dy = -dy
    return dx + dy


cdef int nearest_room(int pos, unsigned char* mask) nogil:
    # Ascending room index is ascending (y, x), so strict < yields the
    # (distance, y, x) tie-break.
    cdef int best = -1
    cdef int best_d = 999
    cdef int r, d
    for r in range(20):
        if mask[r]:
            d = man(pos, r)
            if d < best_d:
                best = r
                best_d = d
    return best


cdef int step_toward(int pos, int target) nogil:
    # First move of a shortest path: strictly-closer neighbor with the
    # smallest destination index, i.e. smallest (y, x). pos != target.
    cdef int px = room_x(pos)
    cdef int py = room_y(pos)
    cdef int d0 = man(pos, target)
    cdef int best_action = 6
    cdef int best_key = 999
    cdef int a, nx, ny, nidx
    for a in range(4):
        nx = px
        ny = py
        if a == 0:
            ny -= 1
        elif a == 1:
            ny += 1
        elif a == 2:
            nx += 1
        else:
            nx -= 1
        if nx < 0 or nx > 3 or ny < 0 or ny > 4:
            continue
        nidx = ny * 4 + nx
        if man(nidx, target) >= d0:
            continue
        if nidx < best_key:
            best_key = nidx
            best_action = a
    return best_action


cdef int nearest_unexplored(int pos, unsigned char* explored) nogil:
    cdef int best = -1
    cdef int best_d = 999
    cdef int r, d
    for r in range(20):
        if not explored[r]:
            d = man(pos, r)
            if d < best_d:
                best = r
                best_d = d
    return best


cdef int explore_act(int role, int pos, unsigned char* explored,
                     unsigned char* known_rubble, unsigned char* known_victim) nogil:
    cdef int target = nearest_unexplored(pos, explored)
    if target >= 0:
        return step_toward(pos, target)
    cdef unsigned char* duty
    if role == 1:
        duty = known_rubble
    else:
        duty = known_victim
    target = nearest_room(pos, duty)
    if target < 0:
        return 6
    if target == pos:
        return 4 if role == 1 else 5
    return step_toward(pos, target)


cdef int exploit_act(int role, int pos, unsigned char* explored,
                     unsigned char* known_rubble, unsigned char* known_victim) nogil:
    cdef unsigned char* duty
    if role == 1:
        duty = known_rubble
    else:
        duty = known_victim
    if duty[pos]:
        return 4 if role == 1 else 5
    cdef int target = nearest_room(pos, duty)
    if target >= 0:
        return step_toward(pos, target)
    target = nearest_unexplored(pos, explored)
    if target >= 0:
        return step_toward(pos, target)
    return 6


cdef int policy_act(int behavior, int role, int pos, unsigned char* explored,
                    unsigned char* known_rubble, unsigned char* known_victim) nogil:
    if behavior == 0:
        return explore_act(role, pos, explored, known_rubble, known_victim)
    if behavior == 1:
        return exploit_act(role, pos, explored, known_rubble, known_victim)
    return FIXED_NEXT[pos]


cdef void compute_obs(unsigned char* rubble, unsigned char* victim,
                      unsigned char* explored, unsigned char* known_rubble,
                      unsigned char* known_victim) nogil:
    cdef int r
    for r in range(20):
        known_rubble[r] = rubble[r] & explored[r]
        known_victim[r] = 1 if (victim[r] == 1 and explored[r]) else 0


cdef void encode(unsigned char* explored, unsigned char* known_rubble,
                 unsigned char* known_victim, int medic, int eng,
                 unsigned char* bits) nogil:
    cdef int r
    for r in range(20):
        bits[r * 5] = explored[r]
        bits[r * 5 + 1] = known_rubble[r]
        bits[r * 5 + 2] = known_victim[r]
        bits[r * 5 + 3] = 0
        bits[r * 5 + 4] = 0
    bits[medic * 5 + 3] = 1
    bits[eng * 5 + 4] = 1


cdef int tree_walk(int[::1] feature, int[::1] false_child, int[::1] true_child,
                   int[::1] action, int root, unsigned char* bits) nogil:
    cdef int node = root
    while feature[node] >= 0:
        if bits[feature[node]]:
            node = true_child[node]
        else:
            node = false_child[node]
    return action[node]


cdef bint is_legal(int role, int action, int pos, unsigned char* known_rubble,
                   unsigned char* known_victim) nogil:
    if action == 0:
        return room_y(pos) > 0
    if action == 1:
        return room_y(pos) < 4
    if action == 2:
        return room_x(pos) < 3
    if action == 3:
        return room_x(pos) > 0
    if action == 4:
        return role == 1 and known_rubble[pos] == 1
    if action == 5:
        return role == 0 and known_victim[pos] == 1
    return action == 6


cdef void apply_action(int role, int action, unsigned char* rubble,
                       unsigned char* victim, unsigned char* explored,
                       int* medic, int* eng) nogil:
    cdef int pos = eng[0] if role == 1 else medic[0]
    cdef int x = room_x(pos)
    cdef int y = room_y(pos)
    cdef int nidx
    if action < 4:
        if action == 0:
            y -= 1
        elif action == 1:
            y += 1
        elif action == 2:
            x += 1
        else:
            x -= 1
        nidx = y * 4 + x
        explored[nidx] = 1
        if role == 1:
            eng[0] = nidx
        else:
            medic[0] = nidx
    elif action == 4:
        rubble[pos] = 0
        if victim[pos] == 2:
            victim[pos] = 1
    elif action == 5:
        victim[pos] = 3


cdef bint all_rescued(unsigned char* victim) nogil:
    cdef int r
    for r in range(20):
        if victim[r] == 1 or victim[r] == 2:
            return False
    return True


def fidelity_episode(world, int behavior, int role, tree):
    """Roll out the expert pair; count timesteps where the tree agrees with
    the expert's action for `role`. Returns (matches, steps)."""
    cdef unsigned char rubble[20]
    cdef unsigned char victim[20]
    cdef unsigned char explored[20]
    cdef unsigned char known_rubble[20]
    cdef unsigned char known_victim[20]
    cdef unsigned char bits[100]
    cdef unsigned char[::1] src

    src = np.ascontiguousarray(world.rubble, dtype=np.uint8)
    cdef int i
    for i in range(20):
        rubble[i] = src[i]
    src = np.ascontiguousarray(world.victim, dtype=np.uint8)
    for i in range(20):
        victim[i] = src[i]
    src = np.ascontiguousarray(world.explored, dtype=np.uint8)
    for i in range(20):
        explored[i] = src[i]

    cdef int medic = world.medic_idx
    cdef int eng = world.engineer_idx
    cdef int horizon = world.horizon

    cdef int[::1] tfeat = np.ascontiguousarray(tree.feature, dtype=np.int32)
    cdef int[::1] tfc = np.ascontiguousarray(tree.false_child, dtype=np.int32)
    cdef int[::1] ttc = np.ascontiguousarray(tree.true_child, dtype=np.int32)
    cdef int[::1] tact = np.ascontiguousarray(tree.action, dtype=np.int32)
    cdef int root = tree.root

    cdef int t = 0
    cdef int matches = 0
    cdef int ea, ma, expert, pred
    with nogil:
        while t < horizon and not all_rescued(victim):
            compute_obs(rubble, victim, explored, known_rubble, known_victim)
            ea = policy_act(behavior, 1, eng, explored, known_rubble, known_victim)
            ma = policy_act(behavior, 0, medic, explored, known_rubble, known_victim)
            encode(explored, known_rubble, known_victim, medic, eng, bits)
            pred = tree_walk(tfeat, tfc, ttc, tact, root, bits)
            expert = ea if role == 1 else ma
            if pred == expert:
                matches += 1
            apply_action(1, ea, rubble, victim, explored, &medic, &eng)
            apply_action(0, ma, rubble, victim, explored, &medic, &eng)
            t += 1
    return matches, t


def collect_episode(world, int behavior, int role, tree):
    """One data-collection episode for `role`.

    Every visited state is labeled with the expert's action. With no tree the
    expert pair drives; with a tree, the tree drives `role` (illegal picks
    demoted to NoOp) while the expert drives the other agent.
    """
    cdef unsigned char rubble[20]
    cdef unsigned char victim[20]
    cdef unsigned char explored[20]
    cdef unsigned char known_rubble[20]
    cdef unsigned char known_victim[20]
    cdef unsigned char[::1] src

    src = np.ascontiguousarray(world.rubble, dtype=np.uint8)
    cdef int i
    for i in range(20):
        rubble[i] = src[i]
    src = np.ascontiguousarray(world.victim, dtype=np.uint8)
    for i in range(20):
        victim[i] = src[i]
    src = np.ascontiguousarray(world.explored, dtype=np.uint8)
    for i in range(20):
        explored[i] = src[i]

    cdef int medic = world.medic_idx
    cdef int eng = world.engineer_idx
    cdef int horizon = world.horizon

    cdef bint use_tree = tree is not None
    cdef int[::1] tfeat
    cdef int[::1] tfc
    cdef int[::1] ttc
    cdef int[::1] tact
    cdef int root = 0
    if use_tree:
        tfeat = np.ascontiguousarray(tree.feature, dtype=np.int32)
        tfc = np.ascontiguousarray(tree.false_child, dtype=np.int32)
        ttc = np.ascontiguousarray(tree.true_child, dtype=np.int32)
        tact = np.ascontiguousarray(tree.action, dtype=np.int32)
        root = tree.root
    else:
        tfeat = tfc = ttc = tact = np.zeros(1, dtype=np.int32)

    X_arr = np.empty((horizon, 100), dtype=np.uint8)
    y_arr = np.empty(horizon, dtype=np.int64)
    cdef unsigned char[:, ::1] X = X_arr
    cdef long long[::1] y = y_arr

    cdef int t = 0
    cdef int ea, ma, pred, pos
    with nogil:
        while t < horizon and not all_rescued(victim):
            compute_obs(rubble, victim, explored, known_rubble, known_victim)
            ea = policy_act(behavior, 1, eng, explored, known_rubble, known_victim)
            ma = policy_act(behavior, 0, medic, explored, known_rubble, known_victim)
            encode(explored, known_rubble, known_victim, medic, eng, &X[t, 0])
            y[t] = ea if role == 1 else ma
            if use_tree:
                pred = tree_walk(tfeat, tfc, ttc, tact, root, &X[t, 0])
                pos = eng if role == 1 else medic
                if not is_legal(role, pred, pos, known_rubble, known_victim):
                    pred = 6
                if role == 1:
                    ea = pred
                else:
                    ma = pred
            apply_action(1, ea, rubble, victim, explored, &medic, &eng)
            apply_action(0, ma, rubble, victim, explored, &medic, &eng)
            t += 1
    return X_arr[:t].copy(), y_arr[:t].copy()
