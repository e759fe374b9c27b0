"""Switching adaptive controller: dual estimates (one per bus mode), the
switching-instant reset/hold rules, and the runtime proof monitors (common
Lyapunov value, equivalent reference, ideal reference models, containment
scan).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import adapt, kernels
from .adapt import ParameterEstimate
from .excitation import DEFAULT_RANK_TOL, GramWindow
from .netbus import Mode, SwitchEvent, SwitchLog, select_mode
from .plant import DisturbanceTrain, PlantModel, SignalHistory, step_difference


@dataclass
class DualEstimates:
    """theta1 drives the TT (d=1) controller, theta2 the ET (d=d2) controller.

    theta2_memory holds theta2 as it stood at the end of the previous ET
    phase; hold_counter counts the remaining post-re-entry samples during
    which theta2 updates are suppressed.
    """

    theta1: ParameterEstimate
    theta2: ParameterEstimate
    theta2_memory: np.ndarray
    hold_counter: int = 0

    def __post_init__(self):
        if self.theta1.theta.shape[0] == self.theta2.theta.shape[0]:
            raise ValueError("theta1 and theta2 must have distinct dimensions (d2 > 1)")
        if self.theta2_memory.shape != self.theta2.theta.shape:
            raise ValueError("theta2_memory must match theta2's dimension")

    @classmethod
    def create(cls, m1: int, m2: int, d2: int, gamma1: float = 0.5, gamma2: float = 0.5,
               beta0_init: float = 1.0):
        t1 = ParameterEstimate.create(m1, m2, 1, gamma1, beta0_init)
        t2 = ParameterEstimate.create(m1, m2, d2, gamma2, beta0_init)
        return cls(theta1=t1, theta2=t2, theta2_memory=t2.theta.copy(), hold_counter=0)


def apply_reset(duals: DualEstimates, p: int, direction: str, m2: int, d2: int) -> DualEstimates:
    """Apply the switching-instant estimate selection for switch number p.

    Entries into TT (even p, including the initial p=0) zero theta1 and
    snapshot theta2 into memory.  The first entry into ET (p=1) zeros theta2;
    later entries (p=3,5,...) pin theta2 to the stored end-of-previous-phase
    value and suppress its updates for the next m2+d2-1 samples.
    """
    if direction == "ET->TT":
        if p % 2 != 0:
            raise ValueError(f"ET->TT switches carry even indices, got p={p}")
        duals.theta2_memory = duals.theta2.theta.copy()
        duals.theta1 = ParameterEstimate.zero(duals.theta1.theta.shape[0], duals.theta1.gamma)
        duals.hold_counter = 0
    elif direction == "TT->ET":
        if p % 2 != 1:
            raise ValueError(f"TT->ET switches carry odd indices, got p={p}")
        if p == 1:
            duals.theta2 = ParameterEstimate.zero(duals.theta2.theta.shape[0], duals.theta2.gamma)
            duals.hold_counter = 0
        else:
            duals.theta2 = ParameterEstimate(theta=duals.theta2_memory.copy(), gamma=duals.theta2.gamma)
            duals.hold_counter = m2 + d2 - 1
    else:
        raise ValueError(f"unknown switch direction {direction!r}")
    return duals


def _pad(v: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[: v.shape[0]] = v
    return out


def lyapunov(duals: DualEstimates, theta_star_1: np.ndarray, theta_star_2: np.ndarray,
             mode: Mode, v_prev: float | None = None) -> tuple[float, float]:
    """Common Lyapunov value V = |theta*_a - theta_a|^2 for the active mode.

    In TT mode both vectors are zero-padded to the ET dimension (monitor-only
    construction); dV is V - v_prev, 0.0 when no previous value is given.
    """
    M2 = theta_star_2.shape[0]
    if mode == Mode.TT:
        diff = _pad(theta_star_1, M2) - _pad(duals.theta1.theta, M2)
    else:
        diff = np.asarray(theta_star_2, dtype=float) - duals.theta2.theta
    V = float(np.dot(diff, diff))
    dV = 0.0 if v_prev is None else V - float(v_prev)
    return V, dV


class DisturbanceInverseFilter:
    """Runs D through the inverse plant A/B as a difference equation.

    Stable exactly when the plant is minimum phase; the plant constructor
    already enforces that, and it is re-checked here.
    """

    def __init__(self, model: PlantModel):
        from .shiftpoly import zeros_strictly_inside

        if not zeros_strictly_inside(model.b_poly()):
            raise ValueError("inverse filter requires a minimum-phase plant")
        self._a = model.a
        self._b = model.b
        self._din = deque([0.0] * model.m1, maxlen=max(model.m1, 1))
        self._dout = deque([0.0] * model.m2, maxlen=max(model.m2, 1))

    def step(self, d_k: float) -> float:
        acc = float(d_k)
        for l in range(1, self._a.shape[0] + 1):
            acc += self._a[l - 1] * self._din[l - 1]
        for l in range(1, self._b.shape[0]):
            acc -= self._b[l] * self._dout[l - 1]
        out = acc / self._b[0]
        if self._a.shape[0]:
            self._din.appendleft(float(d_k))
        if self._b.shape[0] > 1:
            self._dout.appendleft(out)
        return out


def equivalent_reference(yref_k: float, d_k: float, filt: DisturbanceInverseFilter) -> float:
    """y'ref(k) = yref(k) + D'(k) with D' the inverse-plant-filtered disturbance."""
    return float(yref_k) + filt.step(d_k)


class ReferenceModel:
    """Ideal closed loop at a fixed delay: the true plant, disturbance-free,
    driven by the equivalent reference through the exact-parameter control
    law.  Its regressor is the reference trajectory the adaptive loop should
    converge to; the first element tracks the equivalent reference.
    """

    def __init__(self, model: PlantModel, d: int):
        self.model = model
        self.d = int(d)
        self.theta_star = model.true_theta(self.d)
        self.history = SignalHistory(model.m1, model.m2, d_max=self.d)
        self.M = self.theta_star.shape[0]

    def regressor(self) -> np.ndarray:
        """phi*(k) from the model's own history (without the current input)."""
        m1, m2 = self.model.m1, self.model.m2
        return np.concatenate([
            self.history.y_window(m1),
            self.history.u_window(m2 + self.d - 1),
        ])

    def step(self, yref_prime_ahead: float) -> np.ndarray:
        """Advance one sample driven by y'ref(k+d); returns Phi*(k)."""
        phi = self.regressor()
        u_star = float(kernels.control_output(self.theta_star, phi, float(yref_prime_ahead)))
        Phi = np.concatenate([phi, [u_star]])
        step_difference(self.model, self.history, u_star, None, d=self.d)
        return Phi


def signal_error(phi: np.ndarray, phi_star: np.ndarray) -> float:
    """Euclidean distance between the loop regressor and the model regressor."""
    phi = np.asarray(phi, dtype=float)
    phi_star = np.asarray(phi_star, dtype=float)
    if phi.shape != phi_star.shape:
        raise ValueError(f"regressor dimensions disagree: {phi.shape} vs {phi_star.shape}")
    return float(np.linalg.norm(phi - phi_star))


@dataclass
class ContainmentEntry:
    k_prime: int
    p: int
    errors: list
    ok: bool


@dataclass
class PhaseEntry:
    k_prime: int
    p: int
    length: int
    terminated: bool
    ok: bool


@dataclass
class ContainmentReport:
    entries: list  # ContainmentEntry per TT->ET re-entry with p >= 3
    phases: list  # PhaseEntry per ET phase
    eth: float
    window: int

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries) and all(ph.ok for ph in self.phases)


def containment_check(e: np.ndarray, switches: list[SwitchEvent], eth: float,
                      m2: int, d2: int) -> ContainmentReport:
    """Post-scenario scan of ET re-entry behaviour.

    For each TT->ET switch with p >= 3 the tracking error must stay within
    eth for the first m2+d2 samples of the phase; every terminated ET phase
    must strictly exceed 2 samples between its start k'_p and the closing
    switch instant.
    """
    e = np.asarray(e, dtype=float)
    horizon = e.shape[0]
    window = m2 + d2
    entries: list[ContainmentEntry] = []
    phases: list[PhaseEntry] = []
    slack = 1e-12
    for i, ev in enumerate(switches):
        if ev.direction != "TT->ET":
            continue
        k_prime = ev.k + 1
        nxt = switches[i + 1] if i + 1 < len(switches) else None
        end = nxt.k if nxt is not None else horizon - 1
        length = end - k_prime
        terminated = nxt is not None
        phases.append(PhaseEntry(
            k_prime=k_prime, p=ev.p, length=length, terminated=terminated,
            ok=(length > 2) or not terminated,
        ))
        if ev.p >= 3:
            vals = [float(e[k_prime + l]) for l in range(window) if k_prime + l < horizon]
            entries.append(ContainmentEntry(
                k_prime=k_prime, p=ev.p, errors=vals,
                ok=all(abs(v) <= eth + slack for v in vals),
            ))
    return ContainmentReport(entries=entries, phases=phases, eth=eth, window=window)


@dataclass
class _MonitorBundle:
    theta_star_1: np.ndarray
    theta_star_2: np.ndarray
    filt: DisturbanceInverseFilter
    rm1: ReferenceModel
    rm2: ReferenceModel
    gram: GramWindow
    v_prev: float | None = None


class AppSupervisor:
    """One application's switching loop: mode selection feeds the bus, the
    per-mode controller runs update-then-control, switching instants trigger
    the reset/hold rules, and the plant is stepped with the active mode's
    delay.
    """

    def __init__(self, app_id, model: PlantModel, d2: int, eth: float, yref: np.ndarray,
                 train: DisturbanceTrain | None = None, gamma1: float = 0.5,
                 gamma2: float = 0.5, beta0_init: float = 1.0, oracle: bool = True,
                 rank_tol: float = DEFAULT_RANK_TOL, y_init=(), u_init=()):
        if d2 < 2:
            raise ValueError("d2 must be >= 2")
        self.app_id = app_id
        self.model = model
        self.d2 = int(d2)
        self.eth = float(eth)
        self.yref = np.asarray(yref, dtype=float)
        self.train = train if train is not None else DisturbanceTrain.empty()
        self.rank_tol = rank_tol
        self.oracle = oracle
        m1, m2 = model.m1, model.m2
        self.history = SignalHistory(m1, m2, d_max=self.d2, y_init=y_init, u_init=u_init)
        self.duals = DualEstimates.create(m1, m2, self.d2, gamma1, gamma2, beta0_init)
        self.M1 = self.duals.theta1.theta.shape[0]
        self.M2 = self.duals.theta2.theta.shape[0]
        self.mode = Mode.TT  # initial TT entry (p = 0)
        self.p = 0
        self.switch_log = SwitchLog()
        self.access_counts: dict = {}
        self._phi1_hist: list[np.ndarray] = []
        self._phi2_hist: list[np.ndarray] = []
        self._seed_prestart_regressors(y_init, u_init)
        self._mode_next = self.mode
        self._e_k = 0.0
        self._delay = 1
        if oracle:
            self.monitors = _MonitorBundle(
                theta_star_1=model.true_theta(1),
                theta_star_2=model.true_theta(self.d2),
                filt=DisturbanceInverseFilter(model),
                rm1=ReferenceModel(model, 1),
                rm2=ReferenceModel(model, self.d2),
                gram=GramWindow(self.M2, window_len=8 * self.M2),
            )
        else:
            self.monitors = None
        self._dprime: list[float] = []
        self.rows: dict[str, list] = {name: [] for name in TRACE_FIELDS}
        self.theta_norm_hist: list[float] = []

    # -- pre-start regressors -------------------------------------------------

    def _seed_prestart_regressors(self, y_init, u_init) -> None:
        y_init = np.asarray(y_init, dtype=float)
        u_init = np.asarray(u_init, dtype=float)

        def val_y(t: int) -> float:
            idx = -t
            return float(y_init[idx]) if 0 <= idx < y_init.shape[0] else 0.0

        def val_u(t: int) -> float:
            idx = -t - 1
            return float(u_init[idx]) if 0 <= idx < u_init.shape[0] else 0.0

        m1, m2 = self.model.m1, self.model.m2
        for d, hist in ((1, self._phi1_hist), (self.d2, self._phi2_hist)):
            for t in range(-d, 0):
                parts = [val_y(t - i) for i in range(m1)]
                parts += [val_u(t - j) for j in range(1, m2 + d)]
                parts.append(val_u(t))
                hist.append(np.asarray(parts, dtype=float))

    def _phi_at(self, mode: Mode, t: int) -> np.ndarray:
        if mode == Mode.TT:
            return self._phi1_hist[t + 1]
        return self._phi2_hist[t + self.d2]

    def _ensure_dprime(self, k: int) -> None:
        if self.monitors is None:
            return
        while len(self._dprime) <= k:
            t = len(self._dprime)
            self._dprime.append(self.monitors.filt.step(self.train.value(t)))

    def _yref_prime(self, j: int) -> float:
        if self.monitors is None:
            return float(self.yref[j])
        return float(self.yref[j]) + self._dprime[j]

    # -- per-sample phases ----------------------------------------------------

    def sense(self, k: int) -> Mode:
        """Read y(k), pick the next sample's mode from e(k); returns the mode
        governing this sample's transmission."""
        y_k = self.history.y_lag(0)
        self._e_k = adapt.tracking_error(y_k, self.yref[k])
        self._mode_next = select_mode(self._e_k, self.eth)
        return self.mode

    def set_delay(self, delivery_sample: int, k: int) -> None:
        self._delay = delivery_sample - k

    def supervise_step(self, k: int) -> dict:
        """Update-then-control in the active mode, apply any pending switch
        reset, step the plant with this sample's delay, and evaluate the
        monitors.  Returns the trace row."""
        mode = self.mode
        d = 1 if mode == Mode.TT else self.d2
        m1, m2 = self.model.m1, self.model.m2
        y_k = self.history.y_lag(0)

        est = self.duals.theta1 if mode == Mode.TT else self.duals.theta2
        Phi_lag = self._phi_at(mode, k - d)
        # the update is suppressed on hold samples and at the switch sample
        # itself: the sample that triggers a switch carries the disturbance
        # (or transition transient) in its regression, and folding it into the
        # estimate would poison the stored end-of-phase value that re-entries
        # rely on; a just-reset estimate (zero divisor) must still bootstrap
        switching = self._mode_next != mode and abs(est.theta[-1]) >= kernels.ZERO_FLOOR
        held = mode == Mode.ET and self.duals.hold_counter > 0
        if held or switching:
            eps = y_k - float(kernels.dot(est.theta, Phi_lag))
            if held:
                self.duals.hold_counter -= 1
        else:
            est, eps = adapt.update(est, Phi_lag, y_k)
            if mode == Mode.TT:
                self.duals.theta1 = est
            else:
                self.duals.theta2 = est
            self._bump(mode, "update")

        phi1 = np.concatenate([self.history.y_window(m1), self.history.u_window(m2)])
        phi2 = np.concatenate([self.history.y_window(m1), self.history.u_window(m2 + self.d2 - 1)])
        phi_active = phi1 if mode == Mode.TT else phi2
        u_k = adapt.control_law(est, phi_active, self.yref[k + d])
        self._bump(mode, "control")
        self._phi1_hist.append(np.concatenate([phi1, [u_k]]))
        self._phi2_hist.append(np.concatenate([phi2, [u_k]]))

        switch_code = 0
        if self._mode_next != mode:
            self.p += 1
            direction = "TT->ET" if mode == Mode.TT else "ET->TT"
            self.switch_log.record(k, direction, self.p)
            apply_reset(self.duals, self.p, direction, m2, self.d2)
            switch_code = 1 if direction == "TT->ET" else 2
            self.mode = self._mode_next

        step_difference(self.model, self.history, u_k, self.train, d=d)
        self.theta_norm_hist.append(max(
            float(np.linalg.norm(self.duals.theta1.theta)),
            float(np.linalg.norm(self.duals.theta2.theta)),
        ))

        row = self._monitor_row(k, mode, d, y_k, u_k, eps, est, phi_active, switch_code)
        for name in TRACE_FIELDS:
            self.rows[name].append(row[name])
        return row

    def _bump(self, mode: Mode, op: str) -> None:
        which = "theta1" if mode == Mode.TT else "theta2"
        key = (mode.value, which, op)
        self.access_counts[key] = self.access_counts.get(key, 0) + 1

    def _monitor_row(self, k, mode, d, y_k, u_k, eps, est, phi_active, switch_code) -> dict:
        V = dV = 0.0
        phi_err = 0.0
        rank = 0
        alpha_hat = 0.0
        ortho = 0.0
        yp_k = float(self.yref[k])
        if self.monitors is not None:
            mon = self.monitors
            self._ensure_dprime(k + self.d2)
            yp_k = self._yref_prime(k)
            Phi_star1 = mon.rm1.step(self._yref_prime(k + 1))
            Phi_star2 = mon.rm2.step(self._yref_prime(k + self.d2))
            phi_star = Phi_star1[:-1] if mode == Mode.TT else Phi_star2[:-1]
            phi_err = signal_error(phi_active, phi_star)
            if mode == Mode.TT:
                diff = _pad(mon.theta_star_1, self.M2) - _pad(est.theta, self.M2)
            else:
                diff = mon.theta_star_2 - est.theta
            V = float(np.dot(diff, diff))
            dV = 0.0 if mon.v_prev is None else V - mon.v_prev
            mon.v_prev = V
            Phi2 = self._phi2_hist[-1]
            mon.gram.push(Phi2)
            if len(mon.gram) >= self.M2:
                rep = mon.gram.report(self.rank_tol)
                rank = rep.rank
                alpha_hat = rep.alpha_hat
            theta2_err = mon.theta_star_2 - self.duals.theta2.theta
            ortho = abs(float(np.dot(Phi2, theta2_err))) / (1.0 + float(np.linalg.norm(Phi2)))
        return {
            "app": self.app_id,
            "k": k,
            "mode": mode.value,
            "y": float(y_k),
            "yref": float(self.yref[k]),
            "yref_prime": yp_k,
            "e": self._e_k,
            "u": float(u_k),
            "delay": int(d),
            "eps": float(eps),
            "V": V,
            "dV": dV,
            "phi_err": phi_err,
            "rank": int(rank),
            "alpha_hat": float(alpha_hat),
            "ortho_res": float(ortho),
            "switch": int(switch_code),
            "dist": float(self.train.value(k)),
        }


TRACE_FIELDS = [
    "app", "k", "mode", "y", "yref", "yref_prime", "e", "u", "delay", "eps",
    "V", "dV", "phi_err", "rank", "alpha_hat", "ortho_res", "switch", "dist",
]
