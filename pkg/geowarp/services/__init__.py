"""
Service functions behind the geowarp subcommands.

Each returns a JSON-serializable summary dict and writes its artifacts into
the given output directory. Import them from their modules, e.g.

from geowarp.services.synth_service import synth_service
"""

__all__ = []
