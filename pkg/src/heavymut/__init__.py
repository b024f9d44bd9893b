from . import _about

# define the version before the other imports since these need it
__version__ = _about.__version__

from .core import SetFunction
from .ea import RunRecord, StopCondition, run_opo_ea
from .fitness import load_fitness
from .mutation import MutationOperator, make_operator
