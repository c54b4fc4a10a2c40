"""Truncated shell-cascade dynamics.

A state is a rectangular array of amplitudes ``X[i, n]`` over four species
and a finite shell window ``n_min..n_max``.  The right-hand side has a
quadratic part driven by a :class:`~cascadelab.tensor.CoefficientTensor`
and a diagonal dissipation part ``-kappa * lam**(2*alpha*n) * X``:

    dX[i,n]/dt = sum over entries and base shells b with b+mu3 == n of
                     a * lam**(5*b/2) * X[i1, b+mu1] * X[i2, b+mu2]
                 - kappa * lam**(2*alpha*n) * X[i,n]

Truncation drops a term only together with the whole cancellation group it
belongs to (all slot placements of one base shell reference the same shell
set), so the quadratic part conserves energy exactly on the finite window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import CoefficientTensor, dyadic_cascade_tensor, validate_tensor

N_SPECIES = 4

STATUS_COMPLETED = "completed"
STATUS_BLOWUP = "blowup_detected"
STATUS_UNDERFLOW = "step_underflow"


@dataclass
class CascadeConfig:
    """Scale ratio, dissipation exponent, shell window and coupling tensor."""

    lam: float
    alpha: float
    n_min: int
    n_max: int
    kappa: float = 1.0
    tensor: CoefficientTensor = field(default_factory=CoefficientTensor)
    check_tensor: bool = True  # disable only for deliberate-violation diagnostics

    def __post_init__(self):
        if not 1.0 < self.lam <= 2.0:
            raise ValueError(f"scale ratio must satisfy 1 < lam <= 2, got {self.lam}")
        if self.alpha < 0:
            raise ValueError(f"dissipation exponent must be >= 0, got {self.alpha}")
        if self.kappa < 0:
            raise ValueError(f"dissipation prefactor must be >= 0, got {self.kappa}")
        if self.n_min > self.n_max:
            raise ValueError(f"empty shell window [{self.n_min}, {self.n_max}]")
        if self.check_tensor:
            report = validate_tensor(self.tensor)
            if not report.valid:
                raise ValueError(f"tensor rejected:\n{report}")

    @property
    def n_shells(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def shells(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def zero_state(self, t: float = 0.0) -> "CascadeState":
        return CascadeState(t, np.zeros((N_SPECIES, self.n_shells)))


@dataclass
class CascadeState:
    """Shell amplitudes at one time instant; ``X`` has shape (4, n_shells)."""

    t: float
    X: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[0] != N_SPECIES:
            raise ValueError(f"X must have shape (4, n_shells), got {self.X.shape}")

    def copy(self) -> "CascadeState":
        return CascadeState(self.t, self.X.copy())

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.X)))


def state_from_entries(config: CascadeConfig, entries: dict, t: float = 0.0) -> CascadeState:
    """Build a state from a sparse ``{(i, n): value}`` map."""
    state = config.zero_state(t)
    for (i, n), value in entries.items():
        if not 1 <= i <= N_SPECIES:
            raise ValueError(f"species index {i} outside 1..4")
        if not config.n_min <= n <= config.n_max:
            raise ValueError(f"shell {n} outside [{config.n_min}, {config.n_max}]")
        state.X[i - 1, n - config.n_min] = value
    return state


@dataclass
class CascadeTrajectory:
    samples: list[CascadeState]
    status: str
    blowup_time_estimate: float | None = None

    def __post_init__(self):
        if self.status not in (STATUS_COMPLETED, STATUS_BLOWUP, STATUS_UNDERFLOW):
            raise ValueError(f"unknown status {self.status!r}")
        times = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("sample times must be strictly increasing")
        if self.status == STATUS_BLOWUP and self.blowup_time_estimate is None:
            raise ValueError("blowup status requires a blowup_time_estimate")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def state_array(self) -> np.ndarray:
        """Stacked amplitudes, shape (n_samples, 4, n_shells)."""
        return np.stack([s.X for s in self.samples])


# ---------------------------------------------------------------------------
# right-hand side


class CompiledRHS:
    """Precomputed slice plan for fast repeated right-hand-side evaluation.

    For each tensor entry the admissible base shells form one contiguous
    run, so every contribution is a strided triple product; per entry the
    output shells are distinct, which makes plain slice accumulation safe.
    """

    def __init__(self, config: CascadeConfig):
        self.rates = (config.kappa
                      * config.lam ** (2.0 * config.alpha * config.shells))
        self.guard_weights = config.lam ** (2.0 * config.shells)
        self.terms = []
        lam, n_min, n_max = config.lam, config.n_min, config.n_max
        for (i1, i2, i3, m1, m2, m3), a in config.tensor.entries.items():
            top = n_max - max(m1, m2, m3)
            if top < n_min:
                continue
            count = top - n_min + 1
            amp = a * lam ** (2.5 * np.arange(n_min, top + 1))
            self.terms.append((i1 - 1, i2 - 1, i3 - 1,
                               slice(m1, m1 + count), slice(m2, m2 + count),
                               slice(m3, m3 + count), amp))

    def quadratic(self, X: np.ndarray) -> np.ndarray:
        deriv = np.zeros_like(X)
        for i1, i2, i3, s1, s2, s3, amp in self.terms:
            deriv[i3, s3] += amp * X[i1, s1] * X[i2, s2]
        return deriv

    def __call__(self, X: np.ndarray) -> np.ndarray:
        deriv = self.quadratic(X)
        deriv -= self.rates * X
        return deriv

    def weighted_norm(self, X: np.ndarray) -> float:
        return float(np.sum(self.guard_weights * X ** 2))


def compiled_rhs(config: CascadeConfig) -> CompiledRHS:
    """Cached compiled plan; configs are treated as immutable after this."""
    plan = getattr(config, "_rhs_plan", None)
    if plan is None:
        plan = CompiledRHS(config)
        config._rhs_plan = plan
    return plan


def quadratic_rhs(state: CascadeState, config: CascadeConfig) -> np.ndarray:
    """Quadratic part of the shell derivative with group-safe truncation.

    A (entry, base shell) term is kept only when all three referenced
    shells lie inside the window; the referenced shell set is invariant
    under slot permutation, so whole cancellation groups are kept or
    dropped together and the cubic flux of the result is exactly zero
    for valid tensors.
    """
    return compiled_rhs(config).quadratic(state.X)


def dissipation_rates(config: CascadeConfig) -> np.ndarray:
    """Diagonal decay rates ``kappa * lam**(2*alpha*n)`` over the window."""
    return config.kappa * config.lam ** (2.0 * config.alpha * config.shells)


def cascade_rhs(state: CascadeState, config: CascadeConfig) -> np.ndarray:
    """Full shell derivative: quadratic interaction plus diagonal decay."""
    return compiled_rhs(config)(state.X)


def nonlinear_energy_flux(state: CascadeState, config: CascadeConfig) -> float:
    """Cubic energy flux ``sum X * quadratic_rhs``; zero for valid tensors."""
    return float(np.sum(state.X * quadratic_rhs(state, config)))


def flux_scale(state: CascadeState, config: CascadeConfig) -> float:
    """Natural magnitude the flux is compared against, ``lam^(5 n_max/2) |X|^3``."""
    return config.lam ** (2.5 * config.n_max) * float(np.sum(state.X ** 2)) ** 1.5


# ---------------------------------------------------------------------------
# energies and diagnostics


def total_energy(state: CascadeState) -> float:
    return 0.5 * float(np.sum(state.X ** 2))


def shell_energy(state: CascadeState, i: int, n: int, config: CascadeConfig) -> float:
    return 0.5 * float(state.X[i - 1, n - config.n_min] ** 2)


def weighted_norm(X: np.ndarray, config: CascadeConfig) -> float:
    """Energy-weighted norm ``sum lam**(2n) X**2`` used by the blowup guard."""
    return float(np.sum(config.lam ** (2.0 * config.shells) * X ** 2))


def energy_balance_residual(trajectory: CascadeTrajectory,
                            config: CascadeConfig) -> np.ndarray:
    """Pointwise defect of the energy dissipation balance at interior samples.

    residual_k = dE/dt(t_k) + kappa * sum lam**(2 alpha n) X[i,n](t_k)**2

    with dE/dt from the three-point stencil on the (possibly nonuniform)
    sample grid.  Second-order small on smooth trajectories.
    """
    if len(trajectory.samples) < 3:
        raise ValueError("need at least 3 samples for an interior residual")
    times = trajectory.times
    states = trajectory.state_array()
    energy = 0.5 * np.sum(states ** 2, axis=(1, 2))
    rates = dissipation_rates(config)
    out = np.empty(len(times) - 2)
    for k in range(1, len(times) - 1):
        hl = times[k] - times[k - 1]
        hr = times[k + 1] - times[k]
        dE = (-hr / (hl * (hl + hr)) * energy[k - 1]
              + (hr - hl) / (hl * hr) * energy[k]
              + hl / (hr * (hl + hr)) * energy[k + 1])
        out[k - 1] = dE + float(np.sum(rates * states[k] ** 2))
    return out


def timescale_ratio(n: int, alpha: float, lam: float) -> float:
    """Cascade-to-dissipation timescale ratio ``lam**((5/2 - 2 alpha) n)``.

    Equal to 1 for every shell exactly at alpha = 5/4; strictly increasing
    in n below that threshold, where the cascade outruns dissipation.
    """
    return float(lam ** ((2.5 - 2.0 * alpha) * n))


# ---------------------------------------------------------------------------
# scaling symmetry


def rescale_trajectory(trajectory: CascadeTrajectory, m: int,
                       config: CascadeConfig) -> CascadeTrajectory:
    """Exact scaling symmetry of the dynamics applied sample by sample.

    Produces X'[i, n](t) = lam**((2 alpha - 5/2) m) X[i, n-m](lam**(2 alpha m) t)
    on a time grid compressed by lam**(-2 alpha m).  Because the tensor is
    shell-translation invariant, the output solves the same equations up to
    window truncation, provided the support stays inside the window.
    """
    if abs(m) >= config.n_shells:
        raise ValueError(f"shift {m} empties the {config.n_shells}-shell window")
    lam, alpha = config.lam, config.alpha
    amp = lam ** ((2.0 * alpha - 2.5) * m)
    tfac = lam ** (-2.0 * alpha * m)
    samples = []
    for s in trajectory.samples:
        Xp = np.zeros_like(s.X)
        if m >= 0:
            Xp[:, m:] = amp * s.X[:, : s.X.shape[1] - m]
        else:
            Xp[:, :m] = amp * s.X[:, -m:]
        samples.append(CascadeState(tfac * s.t, Xp))
    est = trajectory.blowup_time_estimate
    return CascadeTrajectory(samples, trajectory.status,
                             None if est is None else tfac * est)


# ---------------------------------------------------------------------------
# builtin dyadic demo


def builtin_dyadic_config(lam: float, alpha: float, n_range: tuple[int, int],
                          kappa: float = 0.0) -> CascadeConfig:
    """Classical dyadic cascade configuration on the given shell window.

    Inviscid by default (kappa = 0) so the species-1 slice reduces to

        dX_n/dt = lam**(5(n-1)/2) X_{n-1}**2 - lam**(5n/2) X_n X_{n+1}

    with no decay term.  ``lam = 2`` is accepted for the dyadic demo.
    """
    n_min, n_max = int(n_range[0]), int(n_range[1])
    if n_min > n_max:
        raise ValueError(f"empty shell range {n_range!r}")
    return CascadeConfig(lam=lam, alpha=alpha, n_min=n_min, n_max=n_max,
                         kappa=kappa, tensor=dyadic_cascade_tensor())
