from .profiling_utils import profile_stage

__all__ = ["profile_stage"]
