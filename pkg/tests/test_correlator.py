"""Line spectra, FDT, weak combination, and the time-grid correlator."""

import math

import numpy as np
import pytest

from weaknoise._grid import GRID_BACKEND, grid_sweep_reference
from weaknoise.correlator import (
    LineSpectrum,
    WeakCorrelatorRequest,
    fdt_max_residual,
    fdt_residual,
    lehmann_spectrum,
    tls_equal_time_variance,
    tls_variance_asymptote,
    weak_correlator_grid,
    weak_positivity_check,
    weak_spectrum,
)
from weaknoise.hilbert import (
    DensityMatrix,
    Operator,
    identity,
    sigma_x,
    sigma_y,
    sigma_z,
    thermal_state,
    tls_hamiltonian,
    tls_thermal,
)
from weaknoise.kernel import equilibrium, markovian
from weaknoise.oscillator import FockSpace, thermal_osc


def random_hermitian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator((m + m.conj().T) / 2, hermitian=True)


def test_line_spectrum_merges_degenerate_lines():
    spec = LineSpectrum.from_lines([1.0, 1.0 + 1e-12, -2.0], [0.25, 0.25, 0.5])
    assert spec.omegas.size == 2
    assert abs(spec.weight_at(1.0) - 0.5) < 1e-15
    assert abs(spec.weight_at(-2.0) - 0.5) < 1e-15
    assert spec.weight_at(5.0) == 0.0


def test_line_spectrum_mirror_and_time():
    spec = LineSpectrum.from_lines([1.0, -1.0], [0.75, 0.25])
    m = spec.mirrored()
    assert abs(m.weight_at(-1.0) - 0.75) < 1e-15
    t = 0.37
    want = 0.75 * np.exp(-1j * t) + 0.25 * np.exp(1j * t)
    assert abs(spec.time_correlator(t) - want) < 1e-15


def test_lehmann_tls_ground():
    H = tls_hamiltonian(1.0)
    rho = thermal_state(H, 0.0)
    spec = lehmann_spectrum(H, rho, sigma_x(), sigma_x())
    # ground |1> absorbs at +omega only
    assert abs(spec.weight_at(1.0) - 1.0) < 1e-12
    assert abs(spec.weight_at(-1.0)) < 1e-12


def test_lehmann_rejects_nonstationary_state():
    H = tls_hamiltonian(1.0)
    plus = DensityMatrix(np.full((2, 2), 0.5))
    with pytest.raises(ValueError):
        lehmann_spectrum(H, plus, sigma_x(), sigma_x())


def test_lehmann_mean_subtraction():
    H = tls_hamiltonian(1.0)
    rho = tls_thermal(1.0, 0.8)
    with_means = lehmann_spectrum(H, rho, sigma_z(), sigma_z(), subtract_means=False)
    centered = lehmann_spectrum(H, rho, sigma_z(), sigma_z())
    mz = np.trace(rho.entries @ sigma_z().entries).real
    assert abs(with_means.weight_at(0.0) - centered.weight_at(0.0) - mz**2) < 1e-12


def test_fdt_thermal():
    H = tls_hamiltonian(1.0)
    assert abs(fdt_residual(H, 0.7, sigma_x(), sigma_x(), 1.0)) < 1e-12
    for A, B in ((sigma_x(), sigma_x()), (sigma_x(), sigma_y()), (sigma_z(), sigma_z())):
        assert fdt_max_residual(H, 0.7, A, B) < 1e-12
    space = FockSpace(24)
    Hosc = Operator(np.diag(np.arange(24, dtype=float)), hermitian=True)
    for A, B in ((space.x, space.x), (space.x, space.p)):
        assert fdt_max_residual(Hosc, 1.3, A, B) < 1e-10
    with pytest.raises(ValueError):
        fdt_residual(H, 0.0, sigma_x(), sigma_x(), 1.0)


def test_fdt_fails_off_equilibrium():
    # detailed balance at the wrong temperature must not pass
    H = tls_hamiltonian(1.0)
    rho = tls_thermal(1.0, 0.7)
    s_ab = lehmann_spectrum(H, rho, sigma_x(), sigma_x())
    s_ba = lehmann_spectrum(H, rho, sigma_x(), sigma_x())
    wrong = s_ab.weight_at(1.0) - math.exp(1.0 / 2.1) * s_ba.weight_at(-1.0)
    assert abs(wrong) > 1e-3


def test_weak_spectrum_markovian_is_symmetrized():
    H = tls_hamiltonian(1.0)
    rho = tls_thermal(1.0, 0.9)
    s_ab = lehmann_spectrum(H, rho, sigma_x(), sigma_y())
    s_ba = lehmann_spectrum(H, rho, sigma_y(), sigma_x())
    weak = weak_spectrum(s_ab, s_ba, markovian())
    mirr = s_ba.mirrored()
    for om in weak.omegas:
        want = (s_ab.weight_at(float(om)) + mirr.weight_at(float(om))) / 2
        assert abs(weak.weight_at(float(om)) - want) < 1e-14


def test_weak_spectrum_equilibrium_silence():
    # detector at the system temperature records nothing, line by line
    for T in (0.3, 1.0):
        H = tls_hamiltonian(1.0)
        rho = thermal_state(H, T)
        s_ab = lehmann_spectrum(H, rho, sigma_x(), sigma_x())
        weak = weak_spectrum(s_ab, s_ab, equilibrium(T))
        assert weak.max_abs_weight() < 1e-14


def test_weak_spectrum_cold_detector_selects_sideband():
    # Td = 0: the weight at +omega is the mirrored BA weight, at -omega the AB one
    H = tls_hamiltonian(1.0)
    rho = tls_thermal(1.0, 0.6)
    s_ab = lehmann_spectrum(H, rho, sigma_x(), sigma_x())
    weak = weak_spectrum(s_ab, s_ab, equilibrium(0.0))
    mirr = s_ab.mirrored()
    assert abs(weak.weight_at(1.0) - mirr.weight_at(1.0)) < 1e-14
    assert abs(weak.weight_at(-1.0) - s_ab.weight_at(-1.0)) < 1e-14


def test_weak_spectrum_misaligned_lines_rejected():
    a = LineSpectrum.from_lines([1.0, -1.0], [0.5, 0.5])
    b = LineSpectrum.from_lines([1.5, -1.5], [0.5, 0.5])
    with pytest.raises(ValueError):
        weak_spectrum(a, b, markovian())


def test_grid_equal_time_markovian():
    # without memory the record correlator is the symmetrized product
    H = tls_hamiltonian(1.0)
    rho = tls_thermal(1.0, 0.8)
    req = WeakCorrelatorRequest(H, rho, ((sigma_x(), 0.3), (sigma_y(), 0.3)),
                                markovian(), 0.05, (0.0, 1.0))
    got = weak_correlator_grid(req)
    anti = (sigma_x().entries @ sigma_y().entries + sigma_y().entries @ sigma_x().entries) / 2
    want = np.trace(rho.entries @ anti)
    assert abs(got - want) < 1e-12


def test_grid_two_time_markovian_closed_form():
    # <{sx(t), sx(0)}>/2 on a thermal TLS = cos(omega t)
    H = tls_hamiltonian(1.0)
    rho = tls_thermal(1.0, 0.8)
    t = 0.7
    req = WeakCorrelatorRequest(H, rho, ((sigma_x(), 0.0), (sigma_x(), t)),
                                markovian(), 0.02, (-1.0, 1.0))
    got = weak_correlator_grid(req)
    assert abs(got - math.cos(t)) < 1e-12


def test_grid_backend_parity():
    rng = np.random.default_rng(23)
    for _ in range(6):
        dim = int(rng.integers(2, 4))
        H = random_hermitian(rng, dim)
        rho_m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho_m = rho_m @ rho_m.conj().T
        rho = DensityMatrix(rho_m / np.trace(rho_m))
        n = int(rng.integers(1, 4))
        norm = float(np.max(np.abs(np.linalg.eigvalsh(H.entries))))
        dt = min(0.05, 0.15 / max(norm, 1.0))
        obs = tuple((random_hermitian(rng, dim), float(rng.uniform(-1, 1))) for _ in range(n))
        req = WeakCorrelatorRequest(H, rho, obs, equilibrium(0.4), dt, (-1.5, 1.5))
        fast = weak_correlator_grid(req)
        ref = weak_correlator_grid(req, backend=grid_sweep_reference)
        assert abs(fast - ref) < 1e-12 * max(1.0, abs(ref))


def test_grid_backend_label():
    assert GRID_BACKEND in ("cython", "python")


def test_grid_cold_silence():
    # ground state, zero-temperature detector: the record is noiseless up to
    # window truncation and O(dt) discretization
    H = tls_hamiltonian(1.0)
    rho = thermal_state(H, 0.0)
    dt = 0.02
    req = WeakCorrelatorRequest(H, rho, ((sigma_x(), -0.5), (sigma_x(), 0.5)),
                                equilibrium(0.0), dt, (-50.0, 50.0))
    val = weak_correlator_grid(req)
    assert abs(val) < 3 * dt


def test_grid_matches_line_spectrum():
    # warm system, cold detector: grid sweep against the Lehmann weak spectrum
    H = tls_hamiltonian(1.0)
    T = 0.8
    rho = thermal_state(H, T)
    kern = equilibrium(0.0)
    tau = 0.6
    req = WeakCorrelatorRequest(H, rho, ((sigma_x(), 0.0), (sigma_x(), tau)),
                                kern, 0.02, (-200.0, 200.0))
    got = weak_correlator_grid(req)
    s_ab = lehmann_spectrum(H, rho, sigma_x(), sigma_x())
    weak = weak_spectrum(s_ab, s_ab, kern)
    want = weak.time_correlator(-tau)  # record at (0, tau): B leads by tau
    scale = max(1.0, abs(want))
    assert abs(got - want) < 0.01 * scale


def test_request_validation():
    H = tls_hamiltonian(1.0)
    rho = thermal_state(H, 0.0)
    with pytest.raises(ValueError):
        WeakCorrelatorRequest(H, rho, ((sigma_x(), 2.0),), markovian(), 0.05, (-1.0, 1.0))
    with pytest.raises(ValueError):
        WeakCorrelatorRequest(H, rho, ((sigma_x(), 0.0),), markovian(), 0.5, (-1.0, 1.0))
    with pytest.raises(ValueError):
        WeakCorrelatorRequest(H, rho, (), markovian(), 0.05, (-1.0, 1.0))
    with pytest.raises(ValueError):
        WeakCorrelatorRequest(H, rho, ((sigma_x(), 0.0),), markovian(), 0.05, (1.0, -1.0))


def test_tls_variance_against_cosine_integral():
    # quadrature equals 2 + (2/pi)(Ci(x) - gamma - ln x) exactly
    from scipy.special import sici

    for x in (0.5, 5.0, 13.0, 100.0, 1e4):
        _, ci = sici(x)
        want = 2.0 + (2.0 / math.pi) * (float(ci) - float(np.euler_gamma) - math.log(x))
        assert abs(tls_equal_time_variance(1.0, x) - want) < 1e-12


def test_tls_variance_limits():
    # no averaging window: bare second moment of sigma_x + sigma_z is 2
    assert abs(tls_equal_time_variance(1.0, 1e-6) - 2.0) < 1e-3
    # long averaging: asymptote with the log-shrinking correction
    for x in (1e3, 1e4):
        v = tls_equal_time_variance(1.0, x)
        a = tls_variance_asymptote(1.0, x)
        assert abs(v - a) < 1e-3
    with pytest.raises(ValueError):
        tls_equal_time_variance(1.0, -1.0)


def test_tls_variance_sign_change():
    from scipy.optimize import brentq

    # the leading-log form crosses zero at exp(pi - gamma) = 12.9926; the
    # full quadrature keeps the Ci(x) correction and crosses at 13.9099
    r_asym = brentq(lambda x: tls_variance_asymptote(1.0, x), 10.0, 16.0, xtol=1e-12)
    assert abs(r_asym - math.exp(math.pi - float(np.euler_gamma))) < 1e-10
    assert abs(r_asym - 13.0) < 0.1
    r_quad = brentq(lambda x: tls_equal_time_variance(1.0, x), 12.0, 16.0, xtol=1e-10)
    assert abs(r_quad - 13.9099472) < 1e-6
    # scale invariance: only omega * t_inf matters
    a = tls_equal_time_variance(2.0, 6.5)
    b = tls_equal_time_variance(1.0, 13.0)
    assert abs(a - b) < 1e-10


def test_weak_positivity_check():
    ok, lo = weak_positivity_check(np.array([[1.0, 0.2], [0.2, 1.0]]), 1e-10)
    assert ok and abs(lo - 0.8) < 1e-12
    ok, lo = weak_positivity_check(np.array([[1.0, 2.0], [2.0, 1.0]]), 1e-10)
    assert not ok and abs(lo + 1.0) < 1e-12
    with pytest.raises(ValueError):
        weak_positivity_check(np.array([[1.0, 2.0], [0.0, 1.0]]))
