"""Uniform frame resampling, matching the engine's contract bit for bit.

index_k = round_half_up(k * (n-1) / (m-1)) for m >= 2, in exact integer
arithmetic; m == 1 selects frame 0. Re-implemented here so the adapter stays
free of engine imports; the contract test pins equality with the engine.
"""


def resample_indices(n_source: int, m_target: int) -> list[int]:
    if n_source <= 0 or m_target <= 0:
        raise ValueError(f"counts must be positive, got n={n_source} m={m_target}")
    if m_target > n_source:
        raise ValueError(f"cannot resample {n_source} frames up to {m_target}")
    if m_target == 1:
        return [0]
    span = n_source - 1
    den = m_target - 1
    return [(2 * k * span + den) // (2 * den) for k in range(m_target)]
