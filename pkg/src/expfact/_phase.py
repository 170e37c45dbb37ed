"""Phase-increment bookkeeping shared by winding numbers and scalar logs."""

import numpy as np

from .errors import Undersampled, ZeroOnPath

# principal increments beyond this are treated as aliasing
MAX_PHASE_STEP = 0.75 * np.pi


def phase_increments(values, closed, max_step=MAX_PHASE_STEP):
    """Principal phase increments along an ordered sample path.

    ``values`` may be 1-d (one path) or 2-d (one path per row). For a closed
    path the wrap-around increment (last -> first) is appended.
    """
    values = np.asarray(values, dtype=complex)
    mags = np.abs(values)
    if mags.size and mags.min() == 0.0:
        idx = int(np.unravel_index(np.argmin(mags), mags.shape)[-1])
        raise ZeroOnPath("value vanishes on path", index=idx)
    nxt = np.roll(values, -1, axis=-1) if closed else values[..., 1:]
    cur = values if closed else values[..., :-1]
    steps = np.angle(nxt / cur)
    if steps.size and np.abs(steps).max() > max_step:
        idx = int(np.unravel_index(np.argmax(np.abs(steps)), steps.shape)[-1])
        raise Undersampled(
            f"phase increment {np.abs(steps).max():.3f} rad exceeds {max_step:.3f}", index=idx
        )
    return steps


def unwrap_log(values, max_step=MAX_PHASE_STEP):
    """Continuous logarithm along a path, anchored at the principal log of the first sample."""
    values = np.asarray(values, dtype=complex)
    steps = phase_increments(values, closed=False, max_step=max_step)
    phase = np.angle(values[..., :1]) + np.concatenate(
        [np.zeros(values.shape[:-1] + (1,)), np.cumsum(steps, axis=-1)], axis=-1
    )
    return np.log(np.abs(values)) + 1j * phase
