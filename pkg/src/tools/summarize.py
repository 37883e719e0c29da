import math
from logging import getLogger
from typing import Dict

from core.common_types import ProbeRecord, RunSummary, SimulationRun, SimulationState

logger = getLogger(__name__)


def margin(record: ProbeRecord) -> float:
    """Signed distance to the bound; negative means violated."""
    if record.lower:
        return record.ratio - record.bound
    return record.bound - record.ratio


def summarize(state: SimulationState) -> Dict:
    """
    Fold the probe records into a pass/fail summary and assemble the run.
    Returns updates to be merged into state.
    """
    config = state.config
    records = sorted(state.records, key=lambda record: record.index)
    headline = state.bound if state.bound is not None else math.nan

    if records:
        max_achieved = max(record.ratio for record in records)
        slack = min(margin(record) for record in records)
        passed = not state.errors and slack >= -config.tolerance
    else:
        max_achieved, slack, passed = math.nan, math.nan, False

    summary = RunSummary(
        max_achieved=max_achieved,
        bound=headline,
        slack=slack,
        passed=passed,
        probes=len(records),
        sampled=state.sampled,
    )
    if passed:
        logger.info(f"✅ {config.scenario.value}: max {max_achieved:.9g} within bound {headline:.9g} (slack {slack:.3g})")
    else:
        logger.error(f"❌ {config.scenario.value}: failed (slack {slack:.3g}, {len(state.errors)} errors)")
        for error in state.errors:
            logger.error(f"  ❌ {error}")

    run = SimulationRun(
        config=config,
        records=records,
        summary=summary,
        transcripts=state.transcripts,
        errors=state.errors,
        notes=state.notes,
    )
    return {"run": run}
