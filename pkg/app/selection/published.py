"""Published comparison constants bundled with the package."""

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

PUBLISHED_PATH = Path(__file__).with_name("published_values.json")


@dataclass(frozen=True)
class SplittingFixture:
    t_max_us: float
    p_success: float
    selection_time_us: float


@lru_cache(maxsize=1)
def load_published() -> dict:
    with open(PUBLISHED_PATH, encoding="utf-8") as fh:
        return json.load(fh)


def splitting_fixture(t_max_us: float) -> SplittingFixture | None:
    for row in load_published()["splitting"]["table"]:
        if abs(row["t_max_us"] - t_max_us) < 1e-9:
            return SplittingFixture(**row)
    return None


def feedback_overhead_us() -> float:
    """Sink's end-of-selection feedback: 2 SIFS + preamble + PLCP header."""
    c = load_published()["ieee80211_ofdm_10mhz_us"]
    return 2 * c["aSIFSTime"] + c["aPreambleLength"] + c["aPLCPHeaderLength"]


def slot_time_us() -> float:
    return load_published()["ieee80211_ofdm_10mhz_us"]["aSlotTime"]


def published_timer_time_us(t_max_us: float, eta: float) -> float | None:
    for row in load_published()["timer_scheme_table"]:
        if abs(row["t_max_us"] - t_max_us) < 1e-9 and abs(row["eta"] - eta) < 1e-9:
            return row["selection_time_us"]
    return None
