# One module per subcommand
from . import dataset, localize, separate, evaluate, pipeline  # noqa: F401
