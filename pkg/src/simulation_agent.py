from logging import getLogger

from langgraph.graph import StateGraph, START, END

from core.common_types import SimulationConfig, SimulationRun, SimulationState
from tools import (
    build_plan,
    place_probes,
    play_games,
    route_after_validation,
    route_by_scenario,
    simulate_advice,
    simulate_faults,
    summarize,
    validate_config,
)

logger = getLogger(__name__)


def route_after_probes(state: SimulationState) -> str:
    """Skip evaluation when probe placement failed."""
    if state.errors:
        return "summarize"
    return route_by_scenario(state)


def build_simulation_agent():
    """Build and return the compiled LangGraph pipeline with scenario-based routing."""
    agent_builder = StateGraph(SimulationState)

    # Add nodes
    agent_builder.add_node('validate_config', validate_config)
    agent_builder.add_node('build_plan', build_plan)
    agent_builder.add_node('place_probes', place_probes)
    agent_builder.add_node('simulate_advice', simulate_advice)
    agent_builder.add_node('simulate_faults', simulate_faults)
    agent_builder.add_node('play_games', play_games)
    agent_builder.add_node('summarize', summarize)

    agent_builder.add_edge(START, 'validate_config')

    # Invalid configs go straight to the summary
    agent_builder.add_conditional_edges(
        'validate_config',
        route_after_validation,
        {
            "invalid": "summarize",
            "game": "play_games",
            "plan": "build_plan"
        }
    )

    agent_builder.add_conditional_edges(
        'build_plan',
        route_by_scenario,
        {
            "summarize": "summarize",
            "advice": "place_probes",
            "faults": "place_probes"
        }
    )

    agent_builder.add_conditional_edges(
        'place_probes',
        route_after_probes,
        {
            "summarize": "summarize",
            "advice": "simulate_advice",
            "faults": "simulate_faults"
        }
    )

    agent_builder.add_edge('simulate_advice', 'summarize')
    agent_builder.add_edge('simulate_faults', 'summarize')
    agent_builder.add_edge('play_games', 'summarize')
    agent_builder.add_edge('summarize', END)

    return agent_builder.compile()


def run_scenario(config: SimulationConfig) -> SimulationRun:
    """Run one scenario through the pipeline and return its run record."""
    logger.info(f"Running scenario {config.scenario.value}...")
    agent = build_simulation_agent()
    result = agent.invoke(SimulationState(config=config))
    return result["run"]
