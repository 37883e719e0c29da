from tools.validate_config import validate_config, route_after_validation, check_config
from tools.build_plan import build_plan, route_by_scenario
from tools.place_probes import place_probes
from tools.simulate_advice import simulate_advice
from tools.simulate_faults import simulate_faults
from tools.play_games import play_games
from tools.summarize import summarize
from tools.validators import verify_theorems, compare_bounds_table

__all__ = [
    'validate_config',
    'route_after_validation',
    'check_config',
    'build_plan',
    'route_by_scenario',
    'place_probes',
    'simulate_advice',
    'simulate_faults',
    'play_games',
    'summarize',
    'verify_theorems',
    'compare_bounds_table'
]
