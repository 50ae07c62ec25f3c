from cosserat.utils.instantiators import instantiate_writers
from cosserat.utils.pylogger import get_pylogger
from cosserat.utils.rich_utils import print_config_tree
from cosserat.utils.utils import extras, get_summary_value, task_wrapper
