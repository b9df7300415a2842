"""Straight-line reference formulas, written from the metric definitions with no shared code."""
from fractions import Fraction


def fitness(hop, max_hop, it, max_it):
    return float(Fraction(hop) / Fraction(max_hop) + Fraction(max_it) / Fraction(it))


def score(p_bh, fit):
    return fit - p_bh * fit


def infection(failures, probes=3):
    return float(Fraction(failures, probes))


def metrics(sends, receives, drops, duration, strict=False):
    """sends: {key: (t_us, bytes)}; receives: {key: t_us}; drops: set of keys."""
    n_sent = len(sends)
    pending = n_sent - len(receives) - len(drops)
    denom = n_sent if strict else n_sent - pending
    pdr = len(receives) / denom if denom else None
    bits = 0
    for k in receives:
        bits += sends[k][1] * 8
    delays = [(receives[k] - sends[k][0]) / 1000.0 for k in receives]
    delay = sum(delays) / len(delays) if delays else None
    plr = 100.0 * (denom - len(receives)) / denom if denom else None
    dpr = 100.0 * len(drops) / (len(drops) + n_sent) if (drops or n_sent) else None
    return {"pdr": pdr, "throughput_bps": bits / duration, "avg_delay_ms": delay, "plr_percent": plr,
            "dpr_percent": dpr}
