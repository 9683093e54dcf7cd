# Pipeline package
from .processor import run_verification_suite
