"""Linear-logistic reachability classifier over scalar Q-values, trained
with a positive-unlabeled risk.

Two risk variants are provided. ``standard_nnpu`` clamps the estimated
negative-class risk at zero, so the total risk is never negative:

    R = eta_p * mean(-log c_pos) + max(0, mean(-log(1-c_unl)) - eta_p * mean(-log(1-c_pos)))

``paper_literal`` keeps the opposite side of the hinge (the inner term is
added only when it is negative), which makes the objective unbounded below
once the classes separate; it exists for side-by-side comparison and is
never the default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VARIANTS = ("standard_nnpu", "paper_literal")
PRE_ACTIVATION_LIMIT = 30.0


@dataclass
class ReachabilityClassifier:
    """sigma(slope * q + intercept) with the pre-activation clamped to +-30."""

    slope: float = 0.0
    intercept: float = 0.0
    eta_p: float = 0.5
    variant: str = "standard_nnpu"

    def __post_init__(self):
        if not 0.0 < self.eta_p < 1.0:
            raise ValueError(f"eta_p must be in (0, 1), got {self.eta_p}")
        if not (np.isfinite(self.slope) and np.isfinite(self.intercept)):
            raise ValueError("classifier parameters must be finite")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown pu variant {self.variant!r}")


def score(classifier: ReachabilityClassifier, q):
    """Reachability score in (0, 1); accepts a scalar or an ndarray of Q-values."""
    qa = np.asarray(q, dtype=np.float64)
    if not np.all(np.isfinite(qa)):
        raise ValueError("non-finite Q-value passed to classifier")
    z = np.clip(classifier.slope * qa + classifier.intercept,
                -PRE_ACTIVATION_LIMIT, PRE_ACTIVATION_LIMIT)
    out = 1.0 / (1.0 + np.exp(-z))
    return float(out) if np.ndim(q) == 0 else out


def _risk_terms(pos_scores, unl_scores, eta_p: float):
    pos = np.asarray(pos_scores, dtype=np.float64).reshape(-1)
    unl = np.asarray(unl_scores, dtype=np.float64).reshape(-1)
    if pos.size == 0 or unl.size == 0:
        raise ValueError("positive and unlabeled score lists must be nonempty")
    if np.any(pos <= 0) or np.any(pos >= 1) or np.any(unl <= 0) or np.any(unl >= 1):
        raise ValueError("scores must lie strictly inside (0, 1)")
    if not 0.0 < eta_p < 1.0:
        raise ValueError(f"eta_p must be in (0, 1), got {eta_p}")
    pos_risk = float(-np.log(pos).mean())          # positives as positives
    unl_neg = float(-np.log1p(-unl).mean())        # unlabeled as negatives
    pos_neg = float(-np.log1p(-pos).mean())        # positives as negatives
    return pos_risk, unl_neg, pos_neg


def pu_loss(pos_scores, unl_scores, eta_p: float, variant: str = "standard_nnpu") -> float:
    if variant not in VARIANTS:
        raise ValueError(f"unknown pu variant {variant!r}")
    pos_risk, unl_neg, pos_neg = _risk_terms(pos_scores, unl_scores, eta_p)
    inner = unl_neg - eta_p * pos_neg
    if variant == "standard_nnpu":
        return eta_p * pos_risk + max(inner, 0.0)
    return eta_p * pos_risk + min(inner, 0.0)


def classifier_update(classifier: ReachabilityClassifier, q_pos, q_unl,
                      lr: float) -> float:
    """One gradient-descent step on pu_loss w.r.t. (slope, intercept).

    Q-values are constants here: no gradient flows into the value table.
    When the hinge is inactive for the configured variant, the clamped term
    contributes zero gradient. Returns the loss at the pre-update parameters.
    """
    q_pos = np.asarray(q_pos, dtype=np.float64).reshape(-1)
    q_unl = np.asarray(q_unl, dtype=np.float64).reshape(-1)
    if q_pos.size == 0 or q_unl.size == 0:
        raise ValueError("positive and unlabeled Q-value lists must be nonempty")
    if not (np.all(np.isfinite(q_pos)) and np.all(np.isfinite(q_unl))):
        raise ValueError("non-finite Q-values")

    z_pos_raw = classifier.slope * q_pos + classifier.intercept
    z_unl_raw = classifier.slope * q_unl + classifier.intercept
    lim = PRE_ACTIVATION_LIMIT
    s_pos = 1.0 / (1.0 + np.exp(-np.clip(z_pos_raw, -lim, lim)))
    s_unl = 1.0 / (1.0 + np.exp(-np.clip(z_unl_raw, -lim, lim)))
    loss = pu_loss(s_pos, s_unl, classifier.eta_p, classifier.variant)

    pos_risk, unl_neg, pos_neg = _risk_terms(s_pos, s_unl, classifier.eta_p)
    inner = unl_neg - classifier.eta_p * pos_neg
    if classifier.variant == "standard_nnpu":
        hinge_open = inner > 0.0
    else:
        hinge_open = inner < 0.0

    # d(-log s)/dz = s - 1 and d(-log(1-s))/dz = s, evaluated at the clipped
    # pre-activation. The clip only stabilizes the loss value; it passes
    # gradients through, so a saturated classifier can always recover.
    d_pos_risk = (s_pos - 1.0) / q_pos.size
    d_pos_neg = s_pos / q_pos.size
    d_unl_neg = s_unl / q_unl.size

    eta = classifier.eta_p
    g_slope = eta * float(d_pos_risk @ q_pos)
    g_int = eta * float(d_pos_risk.sum())
    if hinge_open:
        g_slope += float(d_unl_neg @ q_unl) - eta * float(d_pos_neg @ q_pos)
        g_int += float(d_unl_neg.sum()) - eta * float(d_pos_neg.sum())

    classifier.slope -= lr * g_slope
    classifier.intercept -= lr * g_int
    return loss
