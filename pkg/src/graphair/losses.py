"""Training objectives: adversarial, contrastive, reconstruction, combined.

All functions are pure, operate on torch tensors (numpy arrays are accepted
and converted), preserve the input dtype, and are differentiable w.r.t.
their continuous inputs. Log arguments are clipped at ``EPS`` so values at
the {0,1} boundary stay finite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import torch

EPS = 1e-8


class NonFiniteLossError(RuntimeError):
    """A loss component became NaN or infinite; the trial must stop."""


@dataclass(frozen=True)
class LossWeights:
    """Coefficients of the combined objective and its parts.

    ``lam`` is the feature-reconstruction weight (written λ elsewhere;
    serialized under the key "lambda"). ``tau`` is the contrastive
    temperature.
    """

    alpha: float = 1.0
    beta: float = 0.1
    gamma: float = 0.1
    lam: float = 1.0
    tau: float = 0.5

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "lam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "lambda": self.lam, "tau": self.tau}

    @classmethod
    def from_dict(cls, d: dict) -> "LossWeights":
        return cls(alpha=d.get("alpha", 1.0), beta=d.get("beta", 0.1),
                   gamma=d.get("gamma", 0.1), lam=d.get("lambda", d.get("lam", 1.0)),
                   tau=d.get("tau", 0.5))


@dataclass(frozen=True)
class LossBreakdown:
    adv: float
    con: float
    reconst: float
    total: float

    def as_row(self) -> list[float]:
        return [self.adv, self.con, self.reconst, self.total]


def _as_tensor(x, like: torch.Tensor | None = None) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    t = torch.as_tensor(x)
    if like is not None and t.is_floating_point():
        t = t.to(like.dtype)
    return t


def adversarial_loss(s, s_hat) -> torch.Tensor:
    """Mean log-likelihood the adversary assigns to the true group.

    For two groups this is (1/n) Σ [S_i log Ŝ_i + (1−S_i) log(1−Ŝ_i)] with
    Ŝ_i the predicted probability of group 1; for more groups, the
    categorical generalization (1/n) Σ log Ŝ[i, S_i]. Always ≤ 0, and 0
    exactly when every prediction is one-hot correct. The adversary ascends
    this value; the augmentation and representation models descend it.

    ``s_hat`` may be a length-n vector of group-1 probabilities or an
    n×|S| probability matrix (the group-1 column is used when |S| = 2).
    """
    s_hat = _as_tensor(s_hat)
    s = _as_tensor(s).long()
    if s_hat.ndim == 2 and s_hat.shape[1] > 2:
        picked = s_hat[torch.arange(s_hat.shape[0]), s]
        return torch.log(picked.clamp(min=EPS)).mean()
    if s_hat.ndim == 2:
        s_hat = s_hat[:, 1]
    sf = s.to(s_hat.dtype)
    pos = torch.log(s_hat.clamp(min=EPS))
    neg = torch.log((1.0 - s_hat).clamp(min=EPS))
    return (sf * pos + (1.0 - sf) * neg).mean()


def _cosine_rows(a: torch.Tensor) -> torch.Tensor:
    """Rows scaled to unit norm; zero rows stay zero (similarity 0) with a warning."""
    norms = a.norm(dim=1, keepdim=True)
    if (norms == 0).any():
        warnings.warn("zero-norm embedding row: cosine similarity treated as 0",
                      RuntimeWarning, stacklevel=3)
    return a / norms.clamp(min=EPS)


def pairwise_contrastive(i: int, h, h_prime, tau: float) -> torch.Tensor:
    """l(h_i, h_i′): alignment of node i across views against all distractors.

    Numerator exp(sim(h_i, h_i′)/τ); denominator sums exp(sim(h_i, h_j)/τ)
    over all j (including j = i) plus exp(sim(h_i, h_j′)/τ) over j ≠ i.
    """
    h = _as_tensor(h)
    h_prime = _as_tensor(h_prime, like=h)
    hn, hpn = _cosine_rows(h), _cosine_rows(h_prime)
    sims_own = (hn[i] @ hn.T) / tau
    sims_cross = (hn[i] @ hpn.T) / tau
    numer = torch.exp(sims_cross[i])
    denom = torch.exp(sims_own).sum() + torch.exp(sims_cross).sum() - numer
    return -torch.log(numer / denom)


def contrastive_loss(h, h_prime, tau: float) -> torch.Tensor:
    """(1/2n) Σ_i [l(h_i, h_i′) + l(h_i′, h_i)], vectorized.

    The second term swaps the roles of the two views throughout, so its
    distractor set is the primed view plus cross terms back to the original.
    """
    h = _as_tensor(h)
    h_prime = _as_tensor(h_prime, like=h)
    if h.shape != h_prime.shape:
        raise ValueError(f"shape mismatch: {tuple(h.shape)} vs {tuple(h_prime.shape)}")
    n = h.shape[0]
    hn, hpn = _cosine_rows(h), _cosine_rows(h_prime)
    cross = torch.exp((hn @ hpn.T) / tau)       # [i, j] = exp(sim(h_i, h_j')/tau)
    own = torch.exp((hn @ hn.T) / tau)
    own_p = torch.exp((hpn @ hpn.T) / tau)
    diag = torch.arange(n)
    numer = cross[diag, diag]

    denom_fwd = own.sum(dim=1) + cross.sum(dim=1) - numer
    denom_bwd = own_p.sum(dim=1) + cross.T.sum(dim=1) - numer
    losses = -(torch.log(numer / denom_fwd) + torch.log(numer / denom_bwd))
    return losses.sum() / (2.0 * n)


def reconstruction_loss(adj, edge_probs, x, x_prime, lam: float) -> torch.Tensor:
    """Summed BCE between A and Ã′ plus λ‖X − X′‖²_F.

    ``adj``/``edge_probs`` may be full matrices (dense scoring) or aligned
    1-D vectors holding the candidate pair set when sparsified scoring is
    active; the BCE is summed over whatever entries are given. Probabilities
    are clipped to [EPS, 1−EPS] before the logs.
    """
    edge_probs = _as_tensor(edge_probs)
    adj = _as_tensor(adj, like=edge_probs)
    if adj.shape != edge_probs.shape:
        raise ValueError(f"shape mismatch: {tuple(adj.shape)} vs {tuple(edge_probs.shape)}")
    # The upper clip must stay representable below 1.0 in this dtype;
    # 1 - 1e-8 rounds to exactly 1.0 in float32 and the log then diverges.
    if edge_probs.dtype.is_floating_point:
        top = 1.0 - max(EPS, float(torch.finfo(edge_probs.dtype).eps))
    else:
        top = 1.0 - EPS
    p = edge_probs.clamp(min=EPS, max=top)
    bce = -(adj * torch.log(p) + (1.0 - adj) * torch.log(1.0 - p)).sum()
    x_prime = _as_tensor(x_prime)
    x = _as_tensor(x, like=x_prime)
    return bce + lam * ((x - x_prime) ** 2).sum()


def total_loss(weights: LossWeights, adv, con, reconst):
    """Combine the three parts per the overall objective.

    Returns (total_tensor, LossBreakdown). The tensor keeps the autograd
    graph for the model update; the breakdown records detached floats for
    history logging. Non-finite components abort the trial.
    """
    total = weights.alpha * adv + weights.beta * con + weights.gamma * reconst
    parts = {"adv": adv, "con": con, "reconst": reconst, "total": total}
    values = {}
    for name, v in parts.items():
        f = float(v.detach()) if isinstance(v, torch.Tensor) else float(v)
        if not torch.isfinite(torch.tensor(f)):
            raise NonFiniteLossError(f"loss component {name!r} is non-finite: {f}")
        values[name] = f
    return total, LossBreakdown(**values)
