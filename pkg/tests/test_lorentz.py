import numpy as np
import pytest

from ups.errors import BadBoostError, BadParamsError, NotLorentzError
from ups.lorentz import (
    J,
    GBRParams,
    ScaledLorentz,
    boost_eigencheck,
    classify,
    decompose,
    is_scaled_gbr,
    lower_submatrix,
    make_gbr,
    minor2,
    random_rotation,
    realize,
    sample_scaled_lorentz,
)

T_MATRIX = np.diag([-1.0, 1.0, 1.0, 1.0])
P_MATRIX = np.diag([1.0, -1.0, -1.0, -1.0])


def test_realize_identity():
    assert np.array_equal(realize(ScaledLorentz.identity()), np.eye(4))


def test_realize_improper_non_orthochronous_is_T():
    slt = ScaledLorentz(1.0, np.zeros(3), np.eye(3), proper=False, orthochronous=False)
    assert np.array_equal(realize(slt), T_MATRIX)


def test_realize_satisfies_quadratic_form(rng):
    for _ in range(100):
        slt = sample_scaled_lorentz(rng, allow_negative_s=True)
        A = realize(slt)
        assert np.abs(A.T @ J @ A - slt.s**2 * J).max() < 1e-10 * max(1.0, slt.s**2)


def test_classify_examples(rng):
    info = classify(np.eye(4))
    assert info.is_scaled_lorentz and info.s == 1.0 and info.proper and info.orthochronous

    info = classify(P_MATRIX)
    assert info.is_scaled_lorentz and not info.proper and info.orthochronous

    info = classify(T_MATRIX)
    assert info.is_scaled_lorentz and not info.proper and not info.orthochronous

    bad = rng.normal(size=(4, 4)) + 4 * np.eye(4)  # full rank, not Lorentz
    info = classify(bad)
    assert not info.is_scaled_lorentz and info.residual > 1e-3


def test_decompose_round_trip(rng):
    for _ in range(200):
        A = realize(sample_scaled_lorentz(rng, allow_negative_s=True))
        back = decompose(A)
        assert back.s > 0
        assert np.abs(realize(back) - A).max() < 1e-9


def test_decompose_scaled_identity():
    back = decompose(np.diag([2.5, 2.5, 2.5, 2.5]))
    assert back.s == pytest.approx(2.5)
    assert np.abs(back.v).max() < 1e-12
    assert np.abs(back.O - np.eye(3)).max() < 1e-12
    assert back.proper and back.orthochronous


def test_decompose_concave_convex_form():
    A = 1.7 * np.diag([1.0, -1.0, -1.0, 1.0])
    back = decompose(A)
    assert back.s == pytest.approx(1.7)
    assert np.abs(back.v).max() < 1e-12
    assert np.abs(back.O - np.diag([-1.0, -1.0, 1.0])).max() < 1e-12
    assert back.proper and back.orthochronous
    assert np.abs(realize(back) - A).max() < 1e-12


def test_decompose_rejects_non_lorentz(rng):
    with pytest.raises(NotLorentzError):
        decompose(rng.normal(size=(4, 4)) + 4 * np.eye(4))


def test_flags_compose_like_products(rng):
    # proper/orthochronous flags multiply under the matrix product
    for _ in range(30):
        a = sample_scaled_lorentz(rng)
        b = sample_scaled_lorentz(rng)
        ia, ib = classify(realize(a)), classify(realize(b))
        iab = classify(realize(a) @ realize(b))
        assert iab.is_scaled_lorentz
        assert iab.proper == (ia.proper == ib.proper)
        assert iab.orthochronous == (ia.orthochronous == ib.orthochronous)


def test_boost_eigencheck():
    assert np.allclose(boost_eigencheck(np.zeros(3)), [1.0, 1.0, 1.0])
    v = np.array([0.6, 0.0, 0.0])
    assert np.abs(boost_eigencheck(v) - [1.0, 1.0, 1.25]).max() < 1e-12
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.normal(size=3)
        v *= rng.uniform(0, 0.99) / np.linalg.norm(v)
        eig = boost_eigencheck(v)
        assert (eig > 0).all()
        gamma = 1 / np.sqrt(1 - v @ v)
        assert np.abs(eig - [1.0, 1.0, gamma]).max() < 1e-10
    with pytest.raises(BadBoostError):
        boost_eigencheck(np.array([1.0, 0.0, 0.0]))


def test_minor2_identity_and_oracle(rng):
    eye = np.eye(4)
    assert minor2(eye, (1, 2), (1, 2)) == 1.0
    assert minor2(eye, (1, 2), (1, 3)) == 0.0
    A = rng.normal(size=(4, 4))
    for rows in ((1, 2), (2, 4), (3, 4)):
        for cols in ((1, 3), (2, 4)):
            i, k = rows
            j, l = cols
            det = np.linalg.det(A[np.ix_([i - 1, k - 1], [j - 1, l - 1])])
            assert minor2(A, rows, cols) == pytest.approx(det, rel=1e-12)
    with pytest.raises(IndexError):
        minor2(A, (1, 5), (1, 2))
    with pytest.raises(BadParamsError):
        minor2(A, (2, 1), (1, 2))


def test_make_gbr_identity_and_inverse():
    assert np.array_equal(make_gbr(GBRParams(1.0)), np.eye(3))
    params = GBRParams(2.0, 0.3, -0.7, 1.5)
    G = make_gbr(params)
    G_inv = np.linalg.inv(G)
    # closed-form inverse is again a GBR with (1/lam, -mu/lam, -nu/lam, 1/beta)
    expected = make_gbr(GBRParams(1 / 2.0, -0.3 / 2.0, 0.7 / 2.0, 1 / 1.5))
    assert np.abs(G_inv - expected).max() < 1e-12
    assert is_scaled_gbr(G_inv)
    with pytest.raises(BadParamsError):
        GBRParams(0.0)


def test_gbr_group_closure(rng):
    for _ in range(20):
        g1 = make_gbr(GBRParams(rng.uniform(0.5, 2), rng.normal(), rng.normal(), rng.uniform(0.5, 2)))
        g2 = make_gbr(GBRParams(rng.uniform(0.5, 2), rng.normal(), rng.normal(), rng.uniform(0.5, 2)))
        assert is_scaled_gbr(g1 @ g2)


def test_is_scaled_gbr_rejects_rotation_and_singular():
    th = np.pi / 6
    rot = np.array([[np.cos(th), -np.sin(th), 0], [np.sin(th), np.cos(th), 0], [0, 0, 1.0]])
    assert not is_scaled_gbr(rot)
    singular = np.array([[0.0, 0.0, -0.4], [0.0, 0.0, 0.8], [0.0, 0.0, 1.0]])
    assert not is_scaled_gbr(singular)  # satisfies the minor identities but not invertible


def test_lower_submatrix_and_prop7(rng):
    assert np.array_equal(lower_submatrix(np.eye(4)), np.eye(3))
    for _ in range(200):
        A = realize(sample_scaled_lorentz(rng, allow_negative_s=True))
        assert abs(np.linalg.det(lower_submatrix(A))) > 1e-12


def test_corollary1_diag_forms_have_gbr_submatrix(rng):
    from ups.integrability import persp_minor_vector

    for _ in range(50):
        alpha = rng.uniform(0.3, 3.0)
        lam = rng.choice([-1.0, 1.0])
        A = alpha * np.diag([1.0, lam, lam, 1.0])
        # the hypothesis minors of the corollary vanish / match
        assert minor2(A, (3, 4), (2, 3)) == 0
        assert minor2(A, (3, 4), (2, 4)) == 0
        assert minor2(A, (2, 4), (3, 4)) == 0
        assert minor2(A, (2, 4), (2, 3)) == 0
        assert minor2(A, (3, 4), (3, 4)) == pytest.approx(minor2(A, (2, 4), (2, 4)))
        assert is_scaled_gbr(lower_submatrix(A))


def test_random_rotation_is_rotation(rng):
    for _ in range(20):
        O = random_rotation(rng)
        assert np.abs(O.T @ O - np.eye(3)).max() < 1e-12
        assert np.linalg.det(O) == pytest.approx(1.0)


def test_scaled_lorentz_validation():
    with pytest.raises(BadParamsError):
        ScaledLorentz(0.0, np.zeros(3), np.eye(3))
    with pytest.raises(BadParamsError):
        ScaledLorentz(1.0, np.array([1.0, 0, 0]), np.eye(3))
    with pytest.raises(BadParamsError):
        ScaledLorentz(1.0, np.zeros(3), np.diag([1.0, 1.0, -1.0]))
