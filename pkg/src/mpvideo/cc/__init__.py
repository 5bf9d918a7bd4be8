from .aimd import Aimd
from .bbr import (
    BASELINE_BBR,
    BASELINE_GAIN_CYCLE,
    DELAY_BBR,
    DELAY_BBR_GAIN_CYCLE,
    BaselineBbr,
    CcConstants,
    DelayBbr,
    Mode,
    PacketRecord,
)
from .pacer import Pacer

CONTROLLERS = ("delay_bbr", "baseline_bbr", "aimd")


def make_controller(name: str, constants: CcConstants | None = None, mtu: int = 1000):
    if name == "delay_bbr":
        return DelayBbr(constants)
    if name == "baseline_bbr":
        return BaselineBbr(constants)
    if name == "aimd":
        return Aimd(mtu)
    raise ValueError(f"unknown congestion controller {name!r} (valid: {', '.join(CONTROLLERS)})")


__all__ = [
    "Aimd", "BASELINE_BBR", "BASELINE_GAIN_CYCLE", "BaselineBbr", "CONTROLLERS", "CcConstants",
    "DELAY_BBR", "DELAY_BBR_GAIN_CYCLE", "DelayBbr", "Mode", "PacketRecord", "Pacer", "make_controller",
]
