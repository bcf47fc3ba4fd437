"""Collection roots: the engine suite always; the exporter suite only when
its heavy dependencies are installed; the examples corpus never."""

collect_ignore = ["examples", "src"]
try:
    import granurank_export  # noqa: F401
except ImportError:
    collect_ignore.append("exporter")
