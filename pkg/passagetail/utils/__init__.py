from .numeric_utils import NumericUtils
