from .bp import DecodeResult, TannerGraph, bp_decode
from .encoder import (RankDeficient, SystematicEncoder, build_systematic_encoder, gf2_eliminate,
                      gf2_rank)
from .lifting import LiftedCode, count_4cycles, lift

__all__ = [
    "DecodeResult", "TannerGraph", "bp_decode",
    "RankDeficient", "SystematicEncoder", "build_systematic_encoder", "gf2_eliminate", "gf2_rank",
    "LiftedCode", "count_4cycles", "lift",
]
