import click
from . import __version__
from .commands.simulate_command import simulate_sde
from .commands.hydro_command import solve_hydro
from .commands.support_command import track_support
from .commands.kernel_command import eval_kernel
from .commands.ou_command import identify_ou
from .commands.verify_command import verify
from .commands.config_command import config_group

@click.group()
@click.version_option(version=__version__)
def cli():
    """loggas - numerical lab for log-gas dynamics and their fluctuations"""
    pass

cli.add_command(simulate_sde)
cli.add_command(solve_hydro)
cli.add_command(track_support)
cli.add_command(eval_kernel)
cli.add_command(identify_ou)
cli.add_command(verify)
cli.add_command(config_group)

if __name__ == '__main__':
    cli()
