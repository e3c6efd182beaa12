"""Soft-in/soft-out decoders.

Exact log-MAP BCJR over any TrellisSpec, with either the on-off-keying
channel transition metric (inner line-code decoders) or a pure a-priori
LLR metric (outer FEC decoder, which has no channel port).  Memoryless
codes (Manchester, 4B6B) get direct per-symbol MAP marginalization.

All decoders are batched: leading axis = independent blocks.  LLR sign
convention is L = ln P(bit=1)/P(bit=0).  Priors are clamped to +-LLR_CLAMP
before exponentiation; extrinsic outputs subtract the clamped prior so the
exclusion is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import LutCodeSpec, TrellisSpec

LLR_CLAMP = 50.0
_NEG = -np.inf


def clamp_llr(x: np.ndarray) -> np.ndarray:
    return np.clip(x, -LLR_CLAMP, LLR_CLAMP)


def _check_finite(name, x):
    if not np.isfinite(x).all():
        raise ValueError(f"non-finite values in {name}")


# ---------------------------------------------------------------------------
# Transition metrics
# ---------------------------------------------------------------------------

def gamma_ook(y, label_bits, input_bit, prior, sigma2) -> float:
    """Log transition metric for OOK observations of one trellis section.

    input_bit * prior + (1/2 sigma^2) * sum_j (2 y_j c_j - y_j^2) over the
    bits c_j of the transition's output label.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    y = np.asarray(y, dtype=np.float64)
    c = np.asarray(label_bits, dtype=np.float64)
    ch = float(np.sum(2.0 * y * c - y * y)) / (2.0 * sigma2)
    return float(input_bit) * float(clamp_llr(np.float64(prior))) + ch


def gamma_llr(label_bits, label_priors, input_prior=0.0) -> float:
    """Log transition metric from per-bit a-priori LLRs only."""
    c = np.asarray(label_bits, dtype=np.float64)
    lp = clamp_llr(np.asarray(label_priors, dtype=np.float64))
    return float(np.sum(c * lp)) + float(clamp_llr(np.float64(input_prior)))


def gamma_table_ook(trellis: TrellisSpec, y: np.ndarray, prior: np.ndarray,
                    sigma2: float) -> np.ndarray:
    """Vectorized OOK metric table, shape (B, n_sections, S, A)."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if trellis.inputs_per_step != 1:
        raise ValueError("trellis SISO expects one input bit per section")
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    prior = np.atleast_2d(np.asarray(prior, dtype=np.float64))
    _check_finite("observations", y)
    _check_finite("prior", prior)
    B = y.shape[0]
    n_out = trellis.outputs_per_step
    n = y.shape[-1] // n_out
    if y.shape[-1] != n * n_out or prior.shape[-1] != n:
        raise ValueError("observation/prior lengths inconsistent with trellis")
    ys = y.reshape(B, n, 1, 1, n_out)
    c = trellis.output_bits.astype(np.float64)          # (S, A, n_out)
    g = (2.0 * ys * c - ys * ys).sum(axis=-1) / (2.0 * sigma2)
    g[..., 1] += clamp_llr(prior)[..., None]
    return g


def gamma_table_llr(trellis: TrellisSpec, code_prior: np.ndarray,
                    input_prior: np.ndarray | None = None) -> np.ndarray:
    """Vectorized a-priori-only metric table, shape (B, n_sections, S, A).

    code_prior: (B, n_sections, outputs_per_step) LLRs on the label bits.
    """
    if trellis.inputs_per_step != 1:
        raise ValueError("trellis SISO expects one input bit per section")
    cp = clamp_llr(np.asarray(code_prior, dtype=np.float64))
    if cp.ndim == 2:
        cp = cp[None]
    _check_finite("code prior", cp)
    c = trellis.output_bits.astype(np.float64)
    g = np.einsum("blj,saj->blsa", cp, c)
    if input_prior is not None:
        ip = clamp_llr(np.atleast_2d(np.asarray(input_prior, np.float64)))
        g[..., 1] += ip[..., None]
    return g


# ---------------------------------------------------------------------------
# BCJR recursions
# ---------------------------------------------------------------------------

@dataclass
class DecoderWorkspace:
    """Forward/backward/transition metrics of one decode pass (log domain).

    alpha/beta are per-section max-normalized; the subtracted offsets are
    accumulated in alpha_norm/beta_norm so that e.g. the true forward
    metric is alpha + alpha_norm[..., None].
    """

    alpha: np.ndarray           # (B, n+1, S)
    beta: np.ndarray            # (B, n+1, S)
    gamma: np.ndarray           # (B, n, S, A)
    alpha_norm: np.ndarray      # (B, n+1)
    beta_norm: np.ndarray       # (B, n+1)

    def total_log_prob(self) -> np.ndarray:
        """LSE over states of the unnormalized alpha + beta, per section.

        Constant across sections for a consistent decode pass.
        """
        lse = np.logaddexp.reduce(self.alpha + self.beta, axis=-1)
        return lse + self.alpha_norm + self.beta_norm


def bcjr_forward_backward(trellis: TrellisSpec,
                          gamma: np.ndarray) -> DecoderWorkspace:
    """Run the alpha/beta recursions with exact log-sum-exp merges."""
    B, n, S, A = gamma.shape
    in_state, in_input = trellis.incoming()

    alpha = np.full((B, n + 1, S), _NEG)
    alpha[:, 0, trellis.initial_state] = 0.0
    alpha_norm = np.zeros((B, n + 1))
    for l in range(n):
        cand = alpha[:, l][:, in_state] + gamma[:, l][:, in_state, in_input]
        nxt = np.logaddexp.reduce(cand, axis=-1)
        m = nxt.max(axis=-1)
        alpha[:, l + 1] = nxt - m[:, None]
        alpha_norm[:, l + 1] = alpha_norm[:, l] + m

    beta = np.zeros((B, n + 1, S))
    beta_norm = np.zeros((B, n + 1))
    if trellis.termination == "tail-to-zero":
        beta[:, n, :] = _NEG
        beta[:, n, 0] = 0.0
    for l in range(n - 1, -1, -1):
        cand = gamma[:, l] + beta[:, l + 1][:, trellis.next_state]
        cur = np.logaddexp.reduce(cand, axis=-1)
        m = cur.max(axis=-1)
        beta[:, l] = cur - m[:, None]
        beta_norm[:, l] = beta_norm[:, l + 1] + m

    return DecoderWorkspace(alpha=alpha, beta=beta, gamma=gamma,
                            alpha_norm=alpha_norm, beta_norm=beta_norm)


def _posteriors(trellis: TrellisSpec, ws: DecoderWorkspace) -> np.ndarray:
    """Per-transition joint log metrics alpha + gamma + beta', (B, n, S, A)."""
    return (ws.alpha[:, :-1, :, None] + ws.gamma
            + ws.beta[:, 1:][:, :, trellis.next_state])


def _llr_from_partition(post: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """LSE over transitions with bit=1 minus LSE over bit=0."""
    B, n, S, A = post.shape
    flat = post.reshape(B, n, S * A)
    m = np.broadcast_to(mask, (S, A)).reshape(S * A).astype(bool)
    one = np.logaddexp.reduce(flat[..., m], axis=-1)
    zero = np.logaddexp.reduce(flat[..., ~m], axis=-1)
    return one - zero


@dataclass
class BcjrResult:
    app_input: np.ndarray       # (B, n) a-posteriori LLRs of input bits
    app_output: np.ndarray      # (B, n, n_out) a-posteriori LLRs of label bits
    workspace: DecoderWorkspace


def bcjr_decode(trellis: TrellisSpec, gamma: np.ndarray) -> BcjrResult:
    ws = bcjr_forward_backward(trellis, gamma)
    post = _posteriors(trellis, ws)
    S, A = trellis.num_states, trellis.num_input_labels
    input_mask = np.broadcast_to(np.arange(A) == 1, (S, A))
    app_in = _llr_from_partition(post, input_mask)
    n_out = trellis.outputs_per_step
    app_out = np.stack([
        _llr_from_partition(post, trellis.output_bits[:, :, j] == 1)
        for j in range(n_out)], axis=-1)
    return BcjrResult(app_input=app_in, app_output=app_out, workspace=ws)


def bcjr_extrinsic(trellis: TrellisSpec, *, observations=None, prior=None,
                   sigma2: float | None = None,
                   code_prior=None) -> np.ndarray:
    """Extrinsic LLRs on the trellis input bits.

    Inner line-code use: pass OOK `observations` + `prior` + `sigma2`.
    Prior-only use: pass `code_prior` (per-label-bit LLRs) and optional
    `prior` on input bits.  Result is app(input) minus the input prior.
    """
    if observations is not None:
        obs = np.atleast_2d(np.asarray(observations, np.float64))
        n = obs.shape[-1] // trellis.outputs_per_step
        if prior is None:
            prior = np.zeros((obs.shape[0], n))
        prior = np.atleast_2d(np.asarray(prior, np.float64))
        if n == 0:
            return np.zeros_like(prior)
        gamma = gamma_table_ook(trellis, obs, prior, sigma2)
    elif code_prior is not None:
        cp = np.asarray(code_prior, np.float64)
        if cp.ndim == 2:
            cp = cp[None]
        if prior is None:
            prior = np.zeros(cp.shape[:2])
        prior = np.atleast_2d(np.asarray(prior, np.float64))
        if cp.shape[1] == 0:
            return np.zeros_like(prior)
        gamma = gamma_table_llr(trellis, cp, prior)
    else:
        raise ValueError("need observations or code_prior")
    res = bcjr_decode(trellis, gamma)
    return res.app_input - clamp_llr(prior)


# ---------------------------------------------------------------------------
# Memoryless symbol-MAP decoders
# ---------------------------------------------------------------------------

def map_manchester(y: np.ndarray, prior=None,
                   sigma2: float = 1.0) -> np.ndarray:
    """Per-bit extrinsic for the 0->01 / 1->10 map.

    Depends only on the bit's own observation pair; the prior of other
    positions (and of the bit itself) never enters.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[-1] % 2:
        raise ValueError("observation length must be even")
    _check_finite("observations", y)
    pairs = y.reshape(*y.shape[:-1], -1, 2)
    return (pairs[..., 0] - pairs[..., 1]) / sigma2


def map_lut(spec: LutCodeSpec, y: np.ndarray, prior=None,
            sigma2: float = 1.0) -> np.ndarray:
    """Per-input-bit extrinsic for a LUT code by codeword enumeration.

    For each symbol, combines the OOK channel metric of the 2^k candidate
    codewords with the a-priori LLRs of the symbol's input bits, then
    marginalizes per bit, excluding that bit's own prior.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    _check_finite("observations", y)
    iw, ow = spec.input_width, spec.output_width
    if y.shape[-1] % ow:
        raise ValueError(f"observation length {y.shape[-1]} not a multiple "
                         f"of {ow}")
    nsym = y.shape[-1] // ow
    B = y.shape[0]
    if prior is None:
        prior = np.zeros((B, nsym * iw))
    prior = clamp_llr(np.atleast_2d(np.asarray(prior, np.float64)))
    _check_finite("prior", prior)
    pr = prior.reshape(B, nsym, iw)

    ys = y.reshape(B, nsym, 1, ow)
    tab = spec.table.astype(np.float64)                  # (2^iw, ow)
    ch = (2.0 * ys * tab - ys * ys).sum(-1) / (2.0 * sigma2)  # (B, nsym, 2^iw)
    idx = np.arange(1 << iw)
    msg_bits = ((idx[:, None] >> np.arange(iw - 1, -1, -1)) & 1)  # (2^iw, iw)
    metric = ch + np.einsum("bnj,xj->bnx", pr, msg_bits.astype(np.float64))

    ext = np.empty((B, nsym, iw))
    for j in range(iw):
        sel = msg_bits[:, j] == 1
        one = np.logaddexp.reduce(metric[..., sel], axis=-1)
        zero = np.logaddexp.reduce(metric[..., ~sel], axis=-1)
        ext[..., j] = one - zero - pr[..., j]
    return ext.reshape(B, nsym * iw)
