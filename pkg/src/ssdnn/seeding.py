"""Scheduling-independent seed derivation.

Child seeds are a pure function of the master seed and an integer path, so
members can be trained in any order or grouping with identical results.
"""

_MASK = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master, *path):
    """Fold ``path`` into ``master`` with splitmix64, one step per element."""
    # mix the master first so (m, p) and (p, m) do not collide
    state = splitmix64(int(master) & _MASK)
    for p in path:
        state = splitmix64(state ^ (int(p) & _MASK))
    return state
