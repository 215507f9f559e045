from .codec import approximant_from_dict, read_json, write_json  # noqa
from .traces import TraceKind, emit_trace  # noqa
