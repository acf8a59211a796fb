import logging
import sys

from .color import LEVEL_COLORS, colorize, remove_PrintColor

FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ColorFormatter(logging.Formatter):
    """Console formatter that paints the level name."""

    def __init__(self, color: bool = True):
        super().__init__(FORMAT)
        self.color = color

    def format(self, record: logging.LogRecord) -> str:
        text = super().format(record)
        if not self.color:
            return remove_PrintColor(text)
        color = LEVEL_COLORS.get(record.levelname)
        if color is None:
            return text
        return text.replace(record.levelname, colorize(record.levelname, color), 1)


def setup_logging(level: str = "INFO", color: bool = True) -> None:
    root = logging.getLogger("polysched")
    root.setLevel(getattr(logging, level.upper(), logging.INFO))
    for h in list(root.handlers):
        root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(ColorFormatter(color=color and sys.stderr.isatty()))
    root.addHandler(handler)
