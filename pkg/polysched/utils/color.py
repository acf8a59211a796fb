class PrintColor:
    BLACK          = '\033[30m'
    RED            = '\033[31m'
    GREEN          = '\033[32m'
    YELLOW         = '\033[33m'
    BLUE           = '\033[34m'
    MAGENTA        = '\033[35m'
    CYAN           = '\033[36m'
    BOLD           = '\033[1m'
    RESET          = '\033[0m'


LEVEL_COLORS = {
    "DEBUG": PrintColor.CYAN,
    "INFO": PrintColor.GREEN,
    "WARNING": PrintColor.YELLOW,
    "ERROR": PrintColor.RED,
    "CRITICAL": PrintColor.MAGENTA,
}


def colorize(text: str, color: str, enabled: bool = True) -> str:
    if not enabled:
        return text
    return f"{color}{text}{PrintColor.RESET}"


def remove_PrintColor(message: str) -> str:
    ret = message
    for key, v in vars(PrintColor).items():
        if key[:2] == "__":
            continue
        ret = ret.replace(v, '')
    return ret
