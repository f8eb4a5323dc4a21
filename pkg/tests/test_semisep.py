import numpy as np
import pytest
from scipy.integrate import quad_vec

from dirac_isp.errors import OutOfRange
from dirac_isp.examples import scalar_weyl, two_delay_weyl
from dirac_isp.semisep import (
    B_of,
    C_of,
    H_of,
    build_resolvent,
    build_U,
    j_unitarity_defect,
    kernel_T,
    p_cross,
    resolvent_matrix,
    u_at,
    u_inv_at,
)
from dirac_isp.transform import build_kernel_model, kernel_K
from dirac_isp.weyl import WeylData

from _cases import kernel_model


def km_two():
    return kernel_model("two-delay")


def theta1_zero():
    return build_kernel_model(WeylData.create([[1.5j]], [[0.0]], [[1.0]]))


def test_b_c_below_first_delay():
    KM = km_two()
    x = 0.2
    e = np.linalg.norm
    B, C = B_of(KM, x), C_of(KM, x)
    # Z_0 = Zt_0 = 0: B = sqrt2 [0; e^{-2ix beta*}] theta1
    assert e(B[:2]) == 0 and e(C[:, 2:]) == 0


def test_b_scalar_at_zero():
    KM = build_kernel_model(scalar_weyl())
    np.testing.assert_allclose(B_of(KM, 0.0), np.sqrt(2) * np.array([[0.0], [2.0]]),
                               atol=1e-15)


@pytest.mark.parametrize("x, t", [(1.3, 0.5), (0.9, 0.8), (1.9, 0.1), (0.75, 0.35)])
def test_b_c_reconstruct_kernel(x, t):
    # K = F1(x) G1(t) for x > t and F2(x) G2(t) for x < t, with C = [F1, F2]
    # and B = [-G1; G2]
    KM = km_two()
    n = KM.n
    P1 = np.diag([1.0] * n + [0.0] * n)
    low = -C_of(KM, x) @ P1 @ B_of(KM, t)
    up = C_of(KM, t) @ (np.eye(2 * n) - P1) @ B_of(KM, x)
    assert np.linalg.norm(low - kernel_K(KM, x, t)) < 1e-13
    assert np.linalg.norm(up - kernel_K(KM, t, x)) < 1e-13


def test_u_theta1_zero_is_identity():
    KM = theta1_zero()
    FS = build_U(KM, 1.5)
    for x in (0.0, 0.4, 1.5):
        np.testing.assert_allclose(u_at(FS, x), np.eye(2), atol=1e-15)
    RM = build_resolvent(KM, 1.5)
    np.testing.assert_array_equal(RM.P_cross, [[0, 0], [0, 1]])
    assert np.all(kernel_T(RM, 0.9, 0.3) == 0)


def test_u_at_zero():
    FS = build_U(km_two(), 1.5)
    np.testing.assert_array_equal(u_at(FS, 0.0), np.eye(4))


@pytest.mark.parametrize("x", [0.15, 0.5, 1.2])
def test_u_solves_ode(x):
    KM = km_two()
    FS = build_U(KM, 1.5)
    errs = []
    for h in (1e-3, 5e-4):
        fd = (u_at(FS, x + h) - u_at(FS, x - h)) / (2 * h)
        ref = H_of(KM, x) @ u_at(FS, x)
        errs.append(np.linalg.norm(fd - ref) / np.linalg.norm(ref))
    assert errs[1] < 1e-5 and 3.5 < errs[0] / errs[1] < 4.5


def test_u_inverse_formula():
    FS = build_U(km_two(), 1.5)
    for x in (0.2, 0.6, 1.4):
        np.testing.assert_allclose(u_inv_at(FS, x) @ u_at(FS, x), np.eye(4), atol=1e-11)


@pytest.mark.parametrize("name", ["scalar", "delayed", "two-delay", "random-pe-3"])
def test_j_unitarity_up_to_one(name):
    FS = build_U(kernel_model(name), 1.0)
    for x in np.linspace(0.0, 1.0, 41):
        assert j_unitarity_defect(FS, float(x)) <= 1e-10


@pytest.mark.parametrize("d", [0.3, 0.7])
def test_u_continuous_across_delays(d):
    FS = build_U(km_two(), 1.5)
    a = u_at(FS, d * (1 - 1e-15))
    b = u_at(FS, d)
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


def test_reuse_matches_scratch():
    KM = km_two()
    full = build_U(KM, 1.8)
    part = build_U(KM, 0.5)
    grown = build_U(KM, 1.8, base=part)
    for x in (0.1, 0.5, 0.8, 1.7):
        np.testing.assert_allclose(u_at(grown, x), u_at(full, x), rtol=0, atol=1e-12)


def test_out_of_range():
    FS = build_U(km_two(), 1.0)
    with pytest.raises(OutOfRange):
        u_at(FS, 1.2)
    with pytest.raises(OutOfRange):
        build_U(km_two(), -0.1)


@pytest.mark.parametrize("name", ["scalar", "two-delay"])
def test_p_cross_idempotent(name):
    P = p_cross(build_U(kernel_model(name), 1.3))
    assert np.linalg.norm(P @ P - P) <= 1e-12 * np.linalg.norm(P)


def test_h_is_j_skew():
    # J H^* J^* = -H keeps U J-unitary
    KM = km_two()
    n = KM.n
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:], J[n:, :n] = -np.eye(n), np.eye(n)
    for x in (0.1, 0.5, 1.1):
        H = H_of(KM, x)
        assert np.linalg.norm(J @ H.conj().T @ J.T + H) <= 1e-10 * (1 + np.linalg.norm(H))


def test_scalar_t_frozen():
    RM = build_resolvent(build_kernel_model(scalar_weyl()), 1.0)
    # Richardson extrapolation of trapezoid Nystrom (N = 201, 401, 801) gives -1.5918782
    assert abs(kernel_T(RM, 0.5, 0.5)[0, 0] - (-1.5918782358391796)) < 1e-12


@pytest.mark.parametrize("x, t", [(1.1, 0.4), (0.4, 1.1), (0.9, 0.9), (0.2, 0.65)])
def test_resolvent_identity(x, t):
    # (I + T)(I + K) = I:  T(x,t) + K(x,t) + int_0^l T(x,s) K(s,t) ds = 0
    KM = km_two()
    l = 1.3
    RM = build_resolvent(KM, l)
    pts = sorted({0.3, 0.7, x, t})
    val, _ = quad_vec(lambda s: kernel_T(RM, x, s) @ kernel_K(KM, s, t), 0.0, l,
                      points=pts, epsabs=1e-12, epsrel=1e-12)
    res = kernel_T(RM, x, t) + kernel_K(KM, x, t) + val
    assert np.linalg.norm(res) <= 1e-7


def test_resolvent_hermitian():
    RM = build_resolvent(km_two(), 1.6)
    for x, t in [(1.2, 0.5), (0.8, 0.31), (1.5, 1.0)]:
        a, b = kernel_T(RM, x, t), kernel_T(RM, t, x)
        assert np.linalg.norm(a - b.conj().T) <= 1e-8


def test_resolvent_matrix_matches_pointwise():
    RM = build_resolvent(km_two(), 1.2)
    xs = np.array([0.0, 0.3, 0.6, 0.7, 1.2])
    T = resolvent_matrix(RM, xs)
    for i, x in enumerate(xs):
        for j, t in enumerate(xs):
            np.testing.assert_allclose(T[i, j], kernel_T(RM, x, t), atol=1e-13)
