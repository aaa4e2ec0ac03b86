"""Model checkpoints in the MODEL1 named-tensor container.

Scalars and enums travel as 1x1 tensors under meta.* names; the container
itself stays a flat dict of named float64 matrices.
"""

from __future__ import annotations

import numpy as np

from .cca import CcaFusion, CcaModel
from .dataio import read_model, write_model
from .errors import FormatError
from .gru import GruLayerParams, GruStack
from .rank import RankModel
from .seqae import SeqAeModel, Variant

_KIND_SEQAE = 0.0
_KIND_RANK = 1.0
_KIND_CCA = 2.0
_VARIANT_CODES = {Variant.PRESENT: 0.0, Variant.PAST: 1.0, Variant.FUTURE: 2.0}


def _scalar(value: float) -> np.ndarray:
    return np.array([[float(value)]])


def _get_scalar(tensors: dict[str, np.ndarray], name: str) -> float:
    if name not in tensors:
        raise FormatError(f"model container missing {name!r}")
    return float(tensors[name][0, 0])


def _stack_tensors(stack: GruStack, prefix: str) -> dict[str, np.ndarray]:
    out = dict(stack.named(prefix))
    out[f"{prefix}.meta.dropout"] = _scalar(stack.dropout)
    out[f"{prefix}.meta.n_layers"] = _scalar(len(stack.layers))
    return out


def _stack_from(tensors: dict[str, np.ndarray], prefix: str) -> GruStack:
    n_layers = int(_get_scalar(tensors, f"{prefix}.meta.n_layers"))
    layers = []
    for i in range(n_layers):
        base = f"{prefix}.l{i}"
        try:
            layers.append(GruLayerParams(
                w_x_reset=tensors[f"{base}.w_x_reset"],
                w_h_reset=tensors[f"{base}.w_h_reset"],
                w_x_update=tensors[f"{base}.w_x_update"],
                w_h_update=tensors[f"{base}.w_h_update"],
                w_x_cand=tensors[f"{base}.w_x_cand"],
                w_h_cand=tensors[f"{base}.w_h_cand"]))
        except KeyError as exc:
            raise FormatError(f"model container missing tensor for {base}") from exc
    return GruStack(w_proj=tensors[f"{prefix}.w_proj"], layers=layers,
                    dropout=_get_scalar(tensors, f"{prefix}.meta.dropout"))


def save_seqae(path, model: SeqAeModel) -> None:
    tensors = {"meta.kind": _scalar(_KIND_SEQAE),
               "meta.variant": _scalar(_VARIANT_CODES[model.variant]),
               "meta.enc_len": _scalar(model.enc_len),
               "w_readout": model.w_readout}
    tensors.update(_stack_tensors(model.encoder, "enc"))
    tensors.update(_stack_tensors(model.decoder, "dec"))
    write_model(path, tensors)


def load_seqae(path) -> SeqAeModel:
    tensors = read_model(path)
    if _get_scalar(tensors, "meta.kind") != _KIND_SEQAE:
        raise FormatError("container does not hold a sequence autoencoder")
    code = _get_scalar(tensors, "meta.variant")
    variant = {v: k for k, v in _VARIANT_CODES.items()}[code]
    return SeqAeModel(variant=variant,
                      encoder=_stack_from(tensors, "enc"),
                      decoder=_stack_from(tensors, "dec"),
                      w_readout=tensors["w_readout"],
                      enc_len=int(_get_scalar(tensors, "meta.enc_len")))


def save_rank(path, model: RankModel) -> None:
    write_model(path, {
        "meta.kind": _scalar(_KIND_RANK),
        "meta.alpha": _scalar(model.alpha),
        "meta.beta": _scalar(model.beta),
        "meta.lambda": _scalar(model.lam),
        "w_vis_word": model.w_vis_word,
        "w_vis_sent": model.w_vis_sent,
        "w_word": model.w_word,
        "w_sent": model.w_sent,
    })


def load_rank(path) -> RankModel:
    tensors = read_model(path)
    if _get_scalar(tensors, "meta.kind") != _KIND_RANK:
        raise FormatError("container does not hold a ranking model")
    return RankModel(w_vis_word=tensors["w_vis_word"], w_vis_sent=tensors["w_vis_sent"],
                     w_word=tensors["w_word"], w_sent=tensors["w_sent"],
                     alpha=_get_scalar(tensors, "meta.alpha"),
                     beta=_get_scalar(tensors, "meta.beta"),
                     lam=_get_scalar(tensors, "meta.lambda"))


def _cca_tensors(model: CcaModel, prefix: str) -> dict[str, np.ndarray]:
    return {f"{prefix}.a": model.a, f"{prefix}.b": model.b,
            f"{prefix}.rho": model.rho[None, :],
            f"{prefix}.mean_x": model.mean_x[None, :],
            f"{prefix}.mean_y": model.mean_y[None, :],
            f"{prefix}.meta.reg": _scalar(model.reg)}


def _cca_from(tensors: dict[str, np.ndarray], prefix: str) -> CcaModel:
    try:
        return CcaModel(a=tensors[f"{prefix}.a"], b=tensors[f"{prefix}.b"],
                        rho=tensors[f"{prefix}.rho"][0],
                        mean_x=tensors[f"{prefix}.mean_x"][0],
                        mean_y=tensors[f"{prefix}.mean_y"][0],
                        reg=_get_scalar(tensors, f"{prefix}.meta.reg"))
    except KeyError as exc:
        raise FormatError(f"model container missing tensor for {prefix}") from exc


def save_fusion(path, fusion: CcaFusion) -> None:
    tensors = {"meta.kind": _scalar(_KIND_CCA), "meta.weight": _scalar(fusion.weight)}
    tensors.update(_cca_tensors(fusion.cca_word, "word"))
    tensors.update(_cca_tensors(fusion.cca_sent, "sent"))
    write_model(path, tensors)


def load_fusion(path) -> CcaFusion:
    tensors = read_model(path)
    if _get_scalar(tensors, "meta.kind") != _KIND_CCA:
        raise FormatError("container does not hold a CCA fusion model")
    return CcaFusion(cca_word=_cca_from(tensors, "word"),
                     cca_sent=_cca_from(tensors, "sent"),
                     weight=_get_scalar(tensors, "meta.weight"))
