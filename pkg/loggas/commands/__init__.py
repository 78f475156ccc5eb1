"""Commands package for loggas"""
from .simulate_command import simulate_sde
from .hydro_command import solve_hydro
from .support_command import track_support
from .kernel_command import eval_kernel
from .ou_command import identify_ou
from .verify_command import verify
from .config_command import config_group

__all__ = ['simulate_sde', 'solve_hydro', 'track_support', 'eval_kernel', 'identify_ou', 'verify', 'config_group']
