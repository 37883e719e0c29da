from logging import getLogger
from typing import Dict

from core.common_types import ProbeRecord, SimulationState
from core.errors import SequencingError
from core.sequences import fault_tolerant_ratio

logger = getLogger(__name__)


def simulate_faults(state: SimulationState) -> Dict:
    """
    Evaluate the fault-tolerant ratio of the multi-processor schedule under every fault pattern.
    Patterns within the fault budget face the closed-form value; single survivors face r.
    Returns updates to be merged into state.
    """
    try:
        records = []
        for probe in state.probes:
            ratio = fault_tolerant_ratio(state.multi, probe["fault_set"])
            bound = state.survivor_bound if probe["survivor"] else state.bound
            records.append(ProbeRecord(
                index=probe["index"],
                kind="survivor" if probe["survivor"] else "faults",
                fault_set=probe["fault_set"],
                ratio=ratio,
                bound=bound,
            ))
            logger.debug(f"faults {probe['fault_set']}: ratio {ratio:.9g} vs {bound:.9g}")
        logger.info(f"✅ Evaluated {len(records)} fault patterns")
        return {"records": records}

    except SequencingError as e:
        return {"errors": state.errors + [f"Fault simulation failed: {e}"]}
