"""State-conditional asset statistics and the regime rotation rules derived from them."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import AbsentState, LengthMismatch
from .market_data import ASSETS, AlignedPanel
from .markov_chain import DiscreteStateSequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RegimeStats:
    """Per-state occupancy and per-asset conditional mean / std of daily log-returns.

    States that never occur carry NaN statistics and are listed in
    `absent_states`; they are never reported as zeros.
    """

    n_states: int
    occupancy: np.ndarray
    cond_mean: pd.DataFrame
    cond_std: pd.DataFrame
    counts: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        occupancy = np.array(self.occupancy, dtype=float)
        if occupancy.shape != (self.n_states,):
            raise LengthMismatch(f"occupancy has shape {occupancy.shape}, expected ({self.n_states},)")
        if np.any(occupancy < 0) or abs(occupancy.sum() - 1.0) > 1e-9:
            raise LengthMismatch(f"occupancy must be a distribution, got {occupancy.tolist()}")
        for name, frame in (("cond_mean", self.cond_mean), ("cond_std", self.cond_std)):
            if frame.shape != (self.n_states, len(ASSETS)) or list(frame.columns) != list(ASSETS):
                raise LengthMismatch(f"{name} must be {self.n_states}x{len(ASSETS)} over {ASSETS}")
        if np.any(self.cond_std.to_numpy() < 0):
            raise LengthMismatch("conditional standard deviations must be nonnegative")
        occupancy.setflags(write=False)
        object.__setattr__(self, "occupancy", occupancy)

    @property
    def absent_states(self) -> List[int]:
        return [s for s in range(self.n_states) if self.occupancy[s] == 0]

    @classmethod
    def from_table(
        cls,
        means: Sequence[Sequence[float]],
        stds: Sequence[Sequence[float]],
        occupancy: Sequence[float],
        renormalize: bool = True,
    ) -> "RegimeStats":
        """Builds stats from published per-state rows ordered (TLT, GLD, SPY)."""
        occ = np.asarray(occupancy, dtype=float)
        if renormalize:
            occ = occ / occ.sum()
        index = pd.RangeIndex(len(occ), name="state")
        return cls(
            n_states=len(occ),
            occupancy=occ,
            cond_mean=pd.DataFrame(np.asarray(means, dtype=float), index=index, columns=list(ASSETS)),
            cond_std=pd.DataFrame(np.asarray(stds, dtype=float), index=index, columns=list(ASSETS)),
        )

    def to_frame(self) -> pd.DataFrame:
        """Long table with columns state, occupancy, asset, mean, std."""
        rows = []
        for state in range(self.n_states):
            for asset in ASSETS:
                rows.append(
                    {
                        "state": state,
                        "occupancy": self.occupancy[state],
                        "asset": asset,
                        "mean": self.cond_mean.loc[state, asset],
                        "std": self.cond_std.loc[state, asset],
                    }
                )
        return pd.DataFrame(rows, columns=["state", "occupancy", "asset", "mean", "std"])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "RegimeStats":
        n_states = int(frame["state"].max()) + 1
        means = frame.pivot(index="state", columns="asset", values="mean")[list(ASSETS)]
        stds = frame.pivot(index="state", columns="asset", values="std")[list(ASSETS)]
        occupancy = frame.groupby("state")["occupancy"].first().reindex(range(n_states))
        return cls(
            n_states=n_states,
            occupancy=occupancy.to_numpy(dtype=float),
            cond_mean=means.rename_axis(index="state", columns=None),
            cond_std=stds.rename_axis(index="state", columns=None),
        )


@dataclass(frozen=True)
class RotationRules:
    """Per-state best (`top1`) and second-best (`top2`) asset by conditional mean."""

    top1: Tuple[str, ...]
    top2: Tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.top1) != len(self.top2):
            raise LengthMismatch("top1 and top2 must cover the same states")
        for state, (a, b) in enumerate(zip(self.top1, self.top2)):
            if a == b or a not in ASSETS or b not in ASSETS:
                raise LengthMismatch(f"state {state}: invalid ranking ({a}, {b})")

    @property
    def n_states(self) -> int:
        return len(self.top1)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"state": range(self.n_states), "top1": self.top1, "top2": self.top2}
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "RotationRules":
        frame = frame.sort_values("state")
        return cls(tuple(frame["top1"]), tuple(frame["top2"]))


def conditional_stats(panel: AlignedPanel, path: DiscreteStateSequence) -> RegimeStats:
    """
    Groups the panel's asset log-returns by decoded regime.

    Args:
        panel: The aligned return panel (length T).
        path: One regime label per panel row.

    Returns:
        Occupancy plus per-state mean and sample std (NaN where undefined).
    """
    if len(path) != len(panel):
        raise LengthMismatch(f"path length {len(path)} != panel length {len(panel)}")
    states = pd.Index(range(path.n_states), name="state")
    grouped = panel.log_returns.reset_index(drop=True).groupby(path.states)
    counts = grouped.size().reindex(states, fill_value=0)
    means = grouped.mean().reindex(states)
    # NaN for states seen fewer than twice: no sample dispersion to report
    stds = grouped.std(ddof=1).reindex(states)
    occupancy = counts.to_numpy(dtype=float) / len(panel)
    absent = [int(s) for s in states[counts.to_numpy() == 0]]
    if absent:
        logger.warning("Regimes %s never occur in this sample", absent)
    return RegimeStats(
        n_states=path.n_states,
        occupancy=occupancy,
        cond_mean=means[list(ASSETS)],
        cond_std=stds[list(ASSETS)],
        counts=counts.to_numpy(),
    )


def derive_rotation_rules(stats: RegimeStats) -> RotationRules:
    """Ranks assets by conditional mean per state; ties go to the earlier asset in ASSETS."""
    top1, top2 = [], []
    for state in range(stats.n_states):
        row = stats.cond_mean.loc[state]
        if stats.occupancy[state] == 0 or row.isna().any():
            raise AbsentState(f"state {state} has no observations to rank assets on")
        ranked = sorted(ASSETS, key=lambda asset: (-row[asset], ASSETS.index(asset)))
        top1.append(ranked[0])
        top2.append(ranked[1])
    return RotationRules(tuple(top1), tuple(top2))


def regime_durations(path: DiscreteStateSequence) -> pd.DataFrame:
    """Run-length summary per state: number of spells and mean / max spell length."""
    states = path.states
    rows = []
    if len(states):
        change = np.flatnonzero(np.diff(states)) + 1
        starts = np.concatenate(([0], change))
        lengths = np.diff(np.concatenate((starts, [len(states)])))
        labels = states[starts]
    else:
        lengths = labels = np.array([], dtype=int)
    for state in range(path.n_states):
        spells = lengths[labels == state]
        rows.append(
            {
                "state": state,
                "spells": int(spells.size),
                "mean_duration": float(spells.mean()) if spells.size else float("nan"),
                "max_duration": int(spells.max()) if spells.size else 0,
            }
        )
    return pd.DataFrame(rows, columns=["state", "spells", "mean_duration", "max_duration"])
