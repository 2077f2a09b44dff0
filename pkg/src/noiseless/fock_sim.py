"""Brute-force Fock-space model of the collective depolarization channel.

Each of N temporal slots carries two polarization modes (H, V).  A single
U(2) element Omega acts identically on every slot; in a slot holding l
photons it acts through the l-th symmetric power of Omega.  This module
enumerates occupation bases, builds the collective unitaries, the Schwinger
operators J_z and J_+, explicit noiseless-subsystem bases, and the exact and
Monte Carlo twirls.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DomainError, EmptySectorError, ResourceError
from .multiplicity import OccupancyMode, SectorKey, allowed_spins, sector_dimension

DEFAULT_DIM_GUARD = 20000
RANK_THRESHOLD = 1e-8
HAAR_CHUNK = 1024

# named random streams; one seed drives all of them
STREAMS = {"haar": 0, "twirl": 1, "fidelity": 2, "logical": 3, "state": 4}


def dimension_guard(guard: Optional[int] = None) -> int:
    if guard is not None:
        return int(guard)
    env = os.environ.get("NSS_DIM_GUARD")
    if env:
        try:
            return int(env)
        except ValueError:
            raise DomainError(f"NSS_DIM_GUARD must be an integer, got {env!r}") from None
    return DEFAULT_DIM_GUARD


def _stream_id(stream: int | str) -> int:
    if isinstance(stream, str):
        try:
            return STREAMS[stream]
        except KeyError:
            raise DomainError(f"unknown random stream {stream!r}") from None
    return int(stream)


# --- U(2) elements -----------------------------------------------------------


@dataclass(frozen=True)
class U2Element:
    """Omega = exp(-i alpha) * [[a, b], [-conj(b), conj(a)]]."""

    alpha: float
    su2_a: complex
    su2_b: complex

    def su2_matrix(self) -> np.ndarray:
        a, b = self.su2_a, self.su2_b
        return np.array([[a, b], [-np.conj(b), np.conj(a)]], dtype=complex)

    def matrix(self) -> np.ndarray:
        return np.exp(-1j * self.alpha) * self.su2_matrix()

    @classmethod
    def from_matrix(cls, omega: np.ndarray, atol: float = 1e-10) -> "U2Element":
        """Split a unitary 2x2 matrix, with alpha = -arg(det)/2 taken in [0, pi)."""
        omega = np.asarray(omega, dtype=complex)
        if omega.shape != (2, 2):
            raise DomainError(f"expected a 2x2 matrix, got shape {omega.shape}")
        if not np.allclose(omega.conj().T @ omega, np.eye(2), atol=atol):
            raise DomainError("matrix is not unitary")
        alpha = float(np.mod(-0.5 * np.angle(np.linalg.det(omega)), np.pi))
        s = np.exp(1j * alpha) * omega
        return cls(alpha, complex(s[0, 0]), complex(s[0, 1]))

    @classmethod
    def identity(cls) -> "U2Element":
        return cls(0.0, 1 + 0j, 0j)

    @classmethod
    def global_phase(cls, phi: float) -> "U2Element":
        """exp(i phi) times the identity."""
        return cls(float(np.mod(-phi, 2 * np.pi)), 1 + 0j, 0j)

    def __matmul__(self, other: "U2Element") -> "U2Element":
        return U2Element.from_matrix(self.matrix() @ other.matrix())


def haar_batch(
    count: int, seed: int, stream: int | str = "haar"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """First ``count`` Haar samples of a stream as arrays (alpha, a, b).

    Samples are drawn in fixed chunks, each from its own counter-derived
    generator, so the sequence never depends on how it is consumed.
    """
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    sid = _stream_id(stream)
    n_chunks = -(-count // HAAR_CHUNK)
    alpha = np.empty(n_chunks * HAAR_CHUNK)
    quat = np.empty((n_chunks * HAAR_CHUNK, 4))
    for c in range(n_chunks):
        sl = slice(c * HAAR_CHUNK, (c + 1) * HAAR_CHUNK)
        alpha[sl], quat[sl] = _haar_chunk(seed, sid, c)
    alpha, quat = alpha[:count], quat[:count]
    return alpha, quat[:, 0] + 1j * quat[:, 1], quat[:, 2] + 1j * quat[:, 3]


def _haar_chunk(seed: int, sid: int, chunk: int) -> tuple[np.ndarray, np.ndarray]:
    ss = np.random.SeedSequence(int(seed), spawn_key=(sid, chunk))
    rng = np.random.default_rng(ss)
    alpha = rng.uniform(0.0, 2 * np.pi, HAAR_CHUNK)
    quat = rng.standard_normal((HAAR_CHUNK, 4))
    quat /= np.linalg.norm(quat, axis=1, keepdims=True)
    return alpha, quat


def haar_samples(count: int, seed: int, stream: int | str = "haar") -> list[U2Element]:
    alpha, a, b = haar_batch(count, seed, stream)
    return [U2Element(float(x), complex(y), complex(z)) for x, y, z in zip(alpha, a, b)]


def haar_sample(seed: int, index: int = 0, stream: int | str = "haar") -> U2Element:
    """The ``index``-th sample of a stream."""
    sid = _stream_id(stream)
    alpha, quat = _haar_chunk(seed, sid, index // HAAR_CHUNK)
    i = index % HAAR_CHUNK
    q = quat[i]
    return U2Element(float(alpha[i]), complex(q[0], q[1]), complex(q[2], q[3]))


def _omega_batch(omegas) -> np.ndarray:
    """(B, 2, 2) matrices from a U2Element, a sequence of them, or (alpha, a, b)."""
    if isinstance(omegas, U2Element):
        omegas = [omegas]
    if isinstance(omegas, tuple) and len(omegas) == 3 and np.ndim(omegas[0]) == 1:
        alpha, a, b = (np.asarray(x) for x in omegas)
    else:
        alpha = np.array([w.alpha for w in omegas], dtype=float)
        a = np.array([w.su2_a for w in omegas], dtype=complex)
        b = np.array([w.su2_b for w in omegas], dtype=complex)
    m = np.empty((alpha.size, 2, 2), dtype=complex)
    m[:, 0, 0], m[:, 0, 1] = a, b
    m[:, 1, 0], m[:, 1, 1] = -np.conj(b), np.conj(a)
    return m * np.exp(-1j * alpha)[:, None, None]


# --- per-slot symmetric powers ------------------------------------------------


def _slot_unitaries(om: np.ndarray, photons: int) -> np.ndarray:
    """Symmetric power of a batch of 2x2 matrices; index = n_H of the slot state.

    a_H^dag -> O11 a_H^dag + O21 a_V^dag and a_V^dag -> O12 a_H^dag + O22 a_V^dag,
    expanded binomially on |q, l-q> = a_H^dag^q a_V^dag^(l-q) / sqrt(q! (l-q)!) |0>.
    """
    lam = photons
    o11, o12, o21, o22 = om[:, 0, 0], om[:, 0, 1], om[:, 1, 0], om[:, 1, 1]
    out = np.zeros((om.shape[0], lam + 1, lam + 1), dtype=complex)
    fact = [math.factorial(k) for k in range(lam + 1)]
    for q in range(lam + 1):
        for r in range(q + 1):
            c1 = math.comb(q, r) * o11**r * o21 ** (q - r)
            for t in range(lam - q + 1):
                p = r + t
                norm = math.sqrt(fact[p] * fact[lam - p] / (fact[q] * fact[lam - q]))
                out[:, p, q] += (
                    norm * c1 * math.comb(lam - q, t) * o12**t * o22 ** (lam - q - t)
                )
    return out


def slot_unitary(omega: U2Element, photons_in_slot: int) -> np.ndarray:
    """(l+1)x(l+1) action of Omega on one slot holding l photons, basis n_H = 0..l."""
    if photons_in_slot < 0:
        raise DomainError(f"photon number must be >= 0, got {photons_in_slot}")
    return _slot_unitaries(_omega_batch(omega), photons_in_slot)[0]


# --- bases and states ----------------------------------------------------------


class FockBasis:
    """Occupation vectors (n_1H, n_1V, ..., n_NH, n_NV), lexicographically ordered.

    Either a fixed photon number (``photons``) or a cap (``max_photons``).
    """

    def __init__(self, n_slots: int, photons: Optional[int], max_photons: int,
                 mode: OccupancyMode, states: list[tuple[int, ...]]):
        self.n_slots = n_slots
        self.photons = photons
        self.max_photons = max_photons
        self.mode = mode
        self.states = tuple(states)
        self.index = {s: i for i, s in enumerate(self.states)}
        occ = np.array(self.states, dtype=np.int64).reshape(len(self.states), n_slots, 2)
        self.n_h = occ[:, :, 0]
        self.n_v = occ[:, :, 1]
        self.slot_photons = self.n_h + self.n_v
        self.photon_numbers = self.slot_photons.sum(axis=1)
        self.twice_m = (self.n_h - self.n_v).sum(axis=1)
        self._pairs = None

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __repr__(self) -> str:
        sector = f"L={self.photons}" if self.photons is not None else f"L<={self.max_photons}"
        return f"FockBasis(N={self.n_slots}, {sector}, {self.mode.value}, dim={self.dim})"

    def pair_structure(self):
        """Index arrays of all (out, in) pairs with equal per-slot photon numbers."""
        if self._pairs is None:
            groups: dict[tuple[int, ...], list[int]] = {}
            for i, row in enumerate(self.slot_photons):
                groups.setdefault(tuple(row), []).append(i)
            out_idx, in_idx = [], []
            for members in groups.values():
                for o in members:
                    for k in members:
                        out_idx.append(o)
                        in_idx.append(k)
            out_idx = np.array(out_idx, dtype=np.int64)
            in_idx = np.array(in_idx, dtype=np.int64)
            self._pairs = (
                out_idx,
                in_idx,
                self.slot_photons[in_idx],
                self.n_h[out_idx],
                self.n_h[in_idx],
            )
        return self._pairs


def _slot_options(mode: OccupancyMode, budget: int) -> list[tuple[int, int]]:
    if mode is OccupancyMode.RESTRICTED:
        return [o for o in ((0, 0), (0, 1), (1, 0)) if sum(o) <= budget]
    return [(h, v) for h in range(budget + 1) for v in range(budget + 1 - h)]


def _occupations(n_slots: int, budget: int, exact: bool, mode: OccupancyMode
                 ) -> Iterator[tuple[int, ...]]:
    cap = 1 if mode is OccupancyMode.RESTRICTED else budget

    def rec(slot: int, remaining: int, prefix: tuple[int, ...]):
        if slot == n_slots:
            if not exact or remaining == 0:
                yield prefix
            return
        if exact and remaining > cap * (n_slots - slot):
            return
        for h, v in _slot_options(mode, remaining):
            yield from rec(slot + 1, remaining - h - v, prefix + (h, v))

    yield from rec(0, budget, ())


def basis_dimension(n_slots: int, photons: Optional[int], mode: OccupancyMode | str,
                    max_photons: Optional[int] = None) -> int:
    mode = OccupancyMode.parse(mode)
    if photons is not None:
        if mode is OccupancyMode.RESTRICTED and photons > n_slots:
            return 0
        return sector_dimension(n_slots, photons, mode)
    top = max_photons if mode is OccupancyMode.GENERAL else min(max_photons, n_slots)
    return sum(sector_dimension(n_slots, lam, mode) for lam in range(top + 1))


def enumerate_basis(
    n_slots: int,
    photons: Optional[int] = None,
    mode: OccupancyMode | str = OccupancyMode.GENERAL,
    *,
    max_photons: Optional[int] = None,
    guard: Optional[int] = None,
) -> FockBasis:
    """Basis of the fixed-L sector (``photons``) or of all L <= ``max_photons``."""
    mode = OccupancyMode.parse(mode)
    if (photons is None) == (max_photons is None):
        raise DomainError("give exactly one of photons or max_photons")
    if n_slots < 1:
        raise DomainError(f"n_slots must be >= 1, got {n_slots}")
    budget = photons if photons is not None else max_photons
    if budget < 0:
        raise DomainError(f"photon number must be >= 0, got {budget}")
    if mode is OccupancyMode.RESTRICTED and photons is not None and photons > n_slots:
        raise DomainError(
            f"restricted occupancy needs L <= N, got L={photons} > N={n_slots}"
        )
    size = basis_dimension(n_slots, photons, mode, max_photons)
    limit = dimension_guard(guard)
    if size > limit:
        raise ResourceError(size, limit)
    states = list(_occupations(n_slots, budget, photons is not None, mode))
    assert len(states) == size
    return FockBasis(n_slots, photons, budget, mode, states)


@dataclass
class StateVector:
    basis: FockBasis
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise DomainError(
                f"amplitude vector has shape {self.amplitudes.shape}, basis has {self.basis.dim} states"
            )
        if self.normalized and abs(np.linalg.norm(self.amplitudes) - 1) > 1e-10:
            raise DomainError("state flagged normalized has norm != 1")

    def density(self) -> "DensityOperator":
        return DensityOperator(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass
class DensityOperator:
    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.basis.dim
        if self.matrix.shape != (d, d):
            raise DomainError(f"density matrix has shape {self.matrix.shape}, basis has {d} states")

    def check(self, atol: float = 1e-10, eig_floor: float = -1e-9) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol):
            raise DomainError("density operator is not hermitian")
        if abs(np.trace(m) - 1) > atol:
            raise DomainError(f"density operator has trace {np.trace(m)}")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < eig_floor:
            raise DomainError("density operator is not positive semidefinite")

    @classmethod
    def maximally_mixed(cls, basis: FockBasis) -> "DensityOperator":
        return cls(basis, np.eye(basis.dim, dtype=complex) / basis.dim)


# --- collective operators ------------------------------------------------------


def collective_unitaries(omegas, basis: FockBasis) -> np.ndarray:
    """Batch of collective unitaries, shape (B, dim, dim)."""
    om = _omega_batch(omegas)
    out_idx, in_idx, ls, out_nh, in_nh = basis.pair_structure()
    lmax = int(basis.slot_photons.max()) if basis.dim else 0
    stack = np.zeros((om.shape[0], lmax + 1, lmax + 1, lmax + 1), dtype=complex)
    for lam in range(lmax + 1):
        stack[:, lam, : lam + 1, : lam + 1] = _slot_unitaries(om, lam)
    vals = np.ones((om.shape[0], out_idx.size), dtype=complex)
    for s in range(basis.n_slots):
        vals *= stack[:, ls[:, s], out_nh[:, s], in_nh[:, s]]
    u = np.zeros((om.shape[0], basis.dim, basis.dim), dtype=complex)
    u[:, out_idx, in_idx] = vals
    return u


def collective_unitary(omega: U2Element, basis: FockBasis) -> np.ndarray:
    """Omega applied to every slot, as a matrix on ``basis``."""
    return collective_unitaries(omega, basis)[0]


def raising_operator(basis: FockBasis) -> sp.csr_matrix:
    """J_+ = sum_s a_sH^dag a_sV on the basis."""
    rows, cols, vals = [], [], []
    n = basis.n_slots
    for k, state in enumerate(basis.states):
        for s in range(n):
            nh, nv = state[2 * s], state[2 * s + 1]
            if nv == 0:
                continue
            target = list(state)
            target[2 * s] += 1
            target[2 * s + 1] -= 1
            i = basis.index.get(tuple(target))
            if i is None:
                # leaves the basis (restricted occupancy keeps nh + nv fixed, so never)
                continue
            rows.append(i)
            cols.append(k)
            vals.append(math.sqrt(nv * (nh + 1)))
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def jz_diagonal(basis: FockBasis) -> np.ndarray:
    return basis.twice_m / 2.0


def _highest_weight_block(basis: FockBasis, twice_j: int):
    jp = raising_operator(basis)
    cols = np.flatnonzero(basis.twice_m == twice_j)
    rows = np.flatnonzero(basis.twice_m == twice_j + 2)
    block = jp[rows][:, cols].toarray() if rows.size and cols.size else None
    return cols, block


def _numeric_rank(a: np.ndarray) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_THRESHOLD * s[0]))


def sector_multiplicity_numeric(key: SectorKey, mode: OccupancyMode | str,
                                guard: Optional[int] = None) -> int:
    """dim(ker J_+ at weight m = j) inside the (N, L) sector, by SVD rank."""
    basis = enumerate_basis(key.n_slots, key.photons, mode, guard=guard)
    cols, block = _highest_weight_block(basis, key.twice_j)
    if block is None:
        return int(cols.size)
    return int(cols.size) - _numeric_rank(block)


# --- noiseless subsystems ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NoiselessBasis:
    """Orthonormal vectors[k, g] of the (N, L, j) sector.

    k runs over the K logical copies, g over the gauge weights m = j, j-1, ..., -j.
    """

    sector: SectorKey
    mode: OccupancyMode
    basis: FockBasis
    vectors: np.ndarray = field(repr=False)

    @property
    def logical_dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def gauge_dim(self) -> int:
        return self.vectors.shape[1]

    def state(self, k: int, g: int) -> StateVector:
        return StateVector(self.basis, self.vectors[k, g])

    def frame(self) -> np.ndarray:
        """Columns ordered (k, g) with g fastest: shape (dim, K * (2j+1))."""
        return self.vectors.reshape(-1, self.basis.dim).T

    def encode(self, logical_state: np.ndarray, gauge_index: int = 0) -> np.ndarray:
        c = np.asarray(logical_state, dtype=complex)
        if c.shape != (self.logical_dim,):
            raise DomainError(
                f"logical state has shape {c.shape}, subsystem dimension is {self.logical_dim}"
            )
        return c @ self.vectors[:, gauge_index, :]


def noiseless_basis(key: SectorKey, mode: OccupancyMode | str,
                    guard: Optional[int] = None) -> NoiselessBasis:
    """Highest-weight states from the null space of J_+, then lowered with J_-."""
    mode = OccupancyMode.parse(mode)
    return _noiseless_basis(key, mode, dimension_guard(guard))


@functools.lru_cache(maxsize=256)
def _noiseless_basis(key: SectorKey, mode: OccupancyMode, guard: int) -> NoiselessBasis:
    basis = enumerate_basis(key.n_slots, key.photons, mode, guard=guard)
    t = key.twice_j
    cols, block = _highest_weight_block(basis, t)
    if block is None:
        null = np.eye(cols.size)
    else:
        null = scipy.linalg.null_space(block, rcond=RANK_THRESHOLD)
    k_dim = null.shape[1]
    if k_dim == 0:
        raise EmptySectorError(f"sector N={key.n_slots}, L={key.photons}, j={key.spin} is empty")
    jm = raising_operator(basis).T.tocsr()
    vectors = np.zeros((k_dim, t + 1, basis.dim), dtype=complex)
    vectors[:, 0, cols] = null.T
    # in units of 1/4: j(j+1) - m(m-1) = (t(t+2) - tm(tm-2)) / 4 with tm = 2m
    for g in range(1, t + 1):
        tm = t - 2 * (g - 1)
        norm = math.sqrt((t * (t + 2) - tm * (tm - 2)) / 4.0)
        vectors[:, g, :] = (jm @ vectors[:, g - 1, :].T).T / norm
    vectors.setflags(write=False)
    return NoiselessBasis(key, mode, basis, vectors)


# --- twirls --------------------------------------------------------------------


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def twirl_monte_carlo(rho: DensityOperator, samples: int, seed: int,
                      stream: int | str = "twirl") -> DensityOperator:
    """Average of U rho U^dag over ``samples`` Haar draws, reduced chunk by chunk in order."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    alpha, a, b = haar_batch(samples, seed, stream)
    acc = np.zeros_like(rho.matrix)
    for start in range(0, samples, HAAR_CHUNK):
        sl = slice(start, start + HAAR_CHUNK)
        u = collective_unitaries((alpha[sl], a[sl], b[sl]), rho.basis)
        acc += np.einsum("bij,jk,blk->il", u, rho.matrix, u.conj(), optimize=True)
    return DensityOperator(rho.basis, _hermitize(acc / samples))


def _sector_frames(basis: FockBasis, mode: OccupancyMode, guard: Optional[int]):
    """(twice_j, frame embedded in ``basis``) for every non-empty sector it covers."""
    if basis.photons is not None:
        photon_numbers = [basis.photons]
    else:
        top = basis.max_photons
        if mode is OccupancyMode.RESTRICTED:
            top = min(top, basis.n_slots)
        photon_numbers = range(top + 1)
    for lam in photon_numbers:
        for spin in allowed_spins(lam):
            try:
                nb = noiseless_basis(SectorKey(basis.n_slots, lam, spin), mode, guard)
            except EmptySectorError:
                continue
            embed = np.array([basis.index[s] for s in nb.basis.states], dtype=np.int64)
            frame = np.zeros((basis.dim, nb.logical_dim * nb.gauge_dim), dtype=complex)
            frame[embed] = nb.frame()
            yield spin.twice_j, nb.logical_dim, frame


def twirl_exact(rho: DensityOperator, mode: OccupancyMode | str | None = None,
                guard: Optional[int] = None) -> DensityOperator:
    """Keep each logical block, replace every gauge factor by its maximally mixed state."""
    basis = rho.basis
    mode = basis.mode if mode is None else OccupancyMode.parse(mode)
    if mode is not basis.mode:
        raise DomainError(f"mode {mode.value} does not match the basis mode {basis.mode.value}")
    out = np.zeros_like(rho.matrix)
    for t, k_dim, frame in _sector_frames(basis, mode, guard):
        d = t + 1
        r = (frame.conj().T @ rho.matrix @ frame).reshape(k_dim, d, k_dim, d)
        reduced = np.einsum("kgqg->kq", r)
        out += frame @ np.kron(reduced, np.eye(d) / d) @ frame.conj().T
    return DensityOperator(basis, _hermitize(out))


# --- logical fidelity ----------------------------------------------------------


@dataclass(frozen=True)
class FidelityReport:
    sector: SectorKey
    mode: OccupancyMode
    seed: int
    fidelities: np.ndarray
    leakage: np.ndarray

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelities.min())

    @property
    def mean_fidelity(self) -> float:
        return float(self.fidelities.mean())

    @property
    def max_leakage(self) -> float:
        return float(self.leakage.max())


def random_logical_state(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(STREAMS["logical"],)))
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def logical_fidelity_check(key: SectorKey, mode: OccupancyMode | str,
                           logical_state: Sequence[complex], samples: int, seed: int,
                           gauge_index: int = 0, guard: Optional[int] = None
                           ) -> FidelityReport:
    """Encode, send through ``samples`` collective unitaries, decode, compare.

    Decoding projects onto the (k, g) frame and traces out the gauge index;
    leakage is the norm of whatever falls outside that frame.
    """
    mode = OccupancyMode.parse(mode)
    nb = noiseless_basis(key, mode, guard)
    c = np.asarray(logical_state, dtype=complex)
    if c.shape != (nb.logical_dim,):
        raise DomainError(
            f"logical state has length {c.size}, subsystem dimension is {nb.logical_dim}"
        )
    c = c / np.linalg.norm(c)
    if not 0 <= gauge_index < nb.gauge_dim:
        raise DomainError(f"gauge index {gauge_index} out of range 0..{nb.gauge_dim - 1}")
    psi = nb.encode(c, gauge_index)
    alpha, a, b = haar_batch(samples, seed, "fidelity")
    fid = np.empty(samples)
    leak = np.empty(samples)
    for start in range(0, samples, HAAR_CHUNK):
        sl = slice(start, start + HAAR_CHUNK)
        u = collective_unitaries((alpha[sl], a[sl], b[sl]), nb.basis)
        out = u @ psi
        coeff = np.einsum("kgd,bd->bkg", nb.vectors.conj(), out)
        # <c| Tr_gauge |out><out| |c> = sum_g |sum_k conj(c_k) coeff[k, g]|^2
        fid[sl] = np.sum(np.abs(np.einsum("k,bkg->bg", c.conj(), coeff)) ** 2, axis=1)
        inside = np.einsum("bkg,kgd->bd", coeff, nb.vectors)
        leak[sl] = np.linalg.norm(out - inside, axis=1)
    return FidelityReport(key, mode, int(seed), fid, leak)
