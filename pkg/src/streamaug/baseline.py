"""History-mean sentiment predictor evaluated prequentially.

Predicts each incoming event's rating before updating on it: the
round-half-up of the user's historical mean when available, else the
global rating mode, else 5. Strictly causal by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import OutOfOrderEvent
from .reviews import ReviewEvent, ReviewStream, round_half_up

COLD_START_RATING = 5


@dataclass
class PredictorState:
    sums: dict[str, int] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    rating_counts: dict[int, int] = field(default_factory=dict)
    last_timestamp: Optional[int] = None

    def global_mode(self) -> Optional[int]:
        if not self.rating_counts:
            return None
        # ties break toward the higher rating for determinism
        return max(self.rating_counts, key=lambda r: (self.rating_counts[r], r))


def history_mean_prediction(state: PredictorState, event: ReviewEvent) -> int:
    count = state.counts.get(event.user_id, 0)
    if count:
        return round_half_up(state.sums[event.user_id] / count)
    mode = state.global_mode()
    return mode if mode is not None else COLD_START_RATING


def predict_then_update(
    state: PredictorState,
    event: ReviewEvent,
    predict: Callable[[PredictorState, ReviewEvent], int] = history_mean_prediction,
) -> tuple[int, PredictorState]:
    """Predict the event's rating, then fold its true rating into state."""
    if state.last_timestamp is not None and event.timestamp < state.last_timestamp:
        raise OutOfOrderEvent(event.timestamp, state.last_timestamp)
    prediction = predict(state, event)
    state.sums[event.user_id] = state.sums.get(event.user_id, 0) + event.rating
    state.counts[event.user_id] = state.counts.get(event.user_id, 0) + 1
    state.rating_counts[event.rating] = state.rating_counts.get(event.rating, 0) + 1
    state.last_timestamp = event.timestamp
    return prediction, state


def prequential_eval(
    stream: ReviewStream,
    *,
    predict: Callable[[PredictorState, ReviewEvent], int] = history_mean_prediction,
    score_original_only: bool = True,
    score_from: Optional[int] = None,
) -> tuple[list[int], list[int]]:
    """Fold the predictor over the stream; return (predicted, gold).

    Every event updates the state, but synthesized events are excluded
    from scoring by default (set score_original_only=False to include
    them). ``score_from`` restricts scoring to events at or after that
    timestamp, e.g. the chronological test split.
    """
    state = PredictorState()
    predicted: list[int] = []
    gold: list[int] = []
    for event in stream.events:
        prediction, state = predict_then_update(state, event, predict)
        if score_original_only and event.is_synthesized:
            continue
        if score_from is not None and event.timestamp < score_from:
            continue
        predicted.append(prediction)
        gold.append(event.rating)
    return predicted, gold
