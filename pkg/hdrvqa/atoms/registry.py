"""
Feature registry

Maps feature names to extractor functions over a FeatureContext. Names are
`<Plane>-<Atom>` for the base set, `HDRMAX1-`, `HDRMAX2POS-` and `HDRMAX2NEG-`
prefixed VIF/DLM side channels, and the PU21 baselines.
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

from pyrsistent import PMap, pmap

from ..errors import RegistryError
from ..models import HDRMAX_CHANNELS, HdrmaxChannel, HdrmaxVariant, Plane
from .detail import dlm_s, edge
from .difference import mad, mad_temporal
from .entropic import srred_hv, trred_hv
from .information import vif_scale
from .structural import ms_essim, pu21_psnr, pu21_ssim

if TYPE_CHECKING:
    from ..unified import FrameTransforms

VIF_SCALES = (1, 2, 3, 4)

HDRMAX_PREFIXES = {
    HdrmaxChannel.H1: "HDRMAX1",
    HdrmaxChannel.H2_POS: "HDRMAX2POS",
    HdrmaxChannel.H2_NEG: "HDRMAX2NEG",
}


@dataclass(frozen=True)
class FeatureContext:
    """Transforms of the current and previous frame pair"""
    ref: "FrameTransforms"
    test: "FrameTransforms"
    prev_ref: Optional["FrameTransforms"] = None
    prev_test: Optional["FrameTransforms"] = None

    @property
    def settings(self):
        return self.ref.settings

    @property
    def has_previous(self) -> bool:
        return self.prev_ref is not None and self.prev_test is not None


@dataclass(frozen=True)
class FeatureDef:
    name: str
    compute: Callable[[FeatureContext], float]
    temporal: bool = False
    similarity: bool = False
    hdrmax_channel: Optional[HdrmaxChannel] = None


# ============================================================================
# BASE FEATURES
# ============================================================================

def _plane_features(plane: Plane) -> List[FeatureDef]:
    p = plane.value

    def base(ctx):
        return ctx.ref.base(plane), ctx.test.base(plane)

    def ms_essim_fn(ctx):
        return ms_essim(*base(ctx), window=ctx.settings.moment_window)

    def dlm_fn(ctx):
        return dlm_s(*base(ctx))

    def mad_fn(ctx):
        ref, test = base(ctx)
        return mad(ref.level(1).A, test.level(1).A)

    def mad_ref_fn(ctx):
        if ctx.prev_ref is None:
            return 0.0
        return mad_temporal(ctx.ref.base(plane).level(1).A, ctx.prev_ref.base(plane).level(1).A)

    def mad_dis_fn(ctx):
        if ctx.prev_test is None:
            return 0.0
        return mad_temporal(ctx.test.base(plane).level(1).A, ctx.prev_test.base(plane).level(1).A)

    def srred_fn(ctx):
        s = ctx.settings
        return srred_hv(*base(ctx), level=1, block=s.rred_block, noise_var=s.rred_noise_var)

    def trred_fn(ctx):
        if not ctx.has_previous:
            return 0.0
        s = ctx.settings
        return trred_hv(
            ctx.ref.temporal(ctx.prev_ref, plane),
            ctx.test.temporal(ctx.prev_test, plane),
            level=1, block=s.rred_block, noise_var=s.rred_noise_var,
        )

    def edge_fn(ctx):
        return edge(*base(ctx), level=1)

    def vif_fn(scale):
        return lambda ctx: vif_scale(*base(ctx), scale, window=ctx.settings.moment_window)

    defs = [
        FeatureDef(f"{p}-MS-ESSIM", ms_essim_fn, similarity=True),
        FeatureDef(f"{p}-DLM-S", dlm_fn, similarity=True),
        FeatureDef(f"{p}-MAD", mad_fn),
        FeatureDef(f"{p}-MAD-Ref", mad_ref_fn, temporal=True),
        FeatureDef(f"{p}-MAD-Dis", mad_dis_fn, temporal=True),
        FeatureDef(f"{p}-SRRED-HV", srred_fn),
        FeatureDef(f"{p}-TRRED-HV", trred_fn, temporal=True),
        FeatureDef(f"{p}-Edge", edge_fn),
    ]
    defs += [FeatureDef(f"{p}-VIF-{s}", vif_fn(s), similarity=True) for s in VIF_SCALES]
    return defs


# ============================================================================
# HDRMAX SIDE CHANNELS
# ============================================================================

def _hdrmax_features(channel: HdrmaxChannel) -> List[FeatureDef]:
    prefix = HDRMAX_PREFIXES[channel]

    def pair(ctx):
        return ctx.ref.hdrmax(channel), ctx.test.hdrmax(channel)

    def vif_fn(scale):
        return lambda ctx: vif_scale(*pair(ctx), scale, window=ctx.settings.moment_window)

    defs = [
        FeatureDef(f"{prefix}-VIF-{s}", vif_fn(s), similarity=True, hdrmax_channel=channel)
        for s in VIF_SCALES
    ]
    defs.append(FeatureDef(f"{prefix}-DLM", lambda ctx: dlm_s(*pair(ctx)), similarity=True, hdrmax_channel=channel))
    return defs


def _pu21_features() -> List[FeatureDef]:
    return [
        FeatureDef("PU21-PSNR", lambda ctx: pu21_psnr(ctx.ref.frame.y, ctx.test.frame.y)),
        FeatureDef(
            "PU21-SSIM",
            lambda ctx: pu21_ssim(ctx.ref.frame.y, ctx.test.frame.y, window=ctx.settings.moment_window),
        ),
    ]


def _build_registry() -> PMap:
    defs: List[FeatureDef] = []
    for plane in Plane:
        defs += _plane_features(plane)
    for channel in HdrmaxChannel:
        defs += _hdrmax_features(channel)
    defs += _pu21_features()
    return pmap({d.name: d for d in defs})


FEATURES: PMap = _build_registry()


def get_feature(name: str) -> FeatureDef:
    """
    Look up a feature by name.

    Raises:
        RegistryError: unknown name
    """
    try:
        return FEATURES[name]
    except KeyError:
        raise RegistryError(name, f"Unknown feature '{name}'")


def list_features() -> List[str]:
    return sorted(FEATURES)


def hdrmax_feature_names(variant: HdrmaxVariant) -> List[str]:
    """Side-channel names added by one HDRMAX variant, in registry order"""
    names: List[str] = []
    for channel in HDRMAX_CHANNELS[HdrmaxVariant(variant)]:
        prefix = HDRMAX_PREFIXES[channel]
        names += [f"{prefix}-VIF-{s}" for s in VIF_SCALES] + [f"{prefix}-DLM"]
    return names


def feature_table() -> Dict[str, Dict[str, object]]:
    """Name -> flags, for listing"""
    return {
        name: {
            "temporal": d.temporal,
            "similarity": d.similarity,
            "hdrmax_channel": d.hdrmax_channel.value if d.hdrmax_channel else None,
        }
        for name, d in sorted(FEATURES.items())
    }
