"""loggas - numerical lab for the dynamics and fluctuations of 1D log-gases"""

__version__ = '0.1.0'
