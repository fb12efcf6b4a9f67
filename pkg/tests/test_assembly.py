import numpy as np
import pytest
import scipy.linalg as sl

from cutvibro import cutcell
from cutvibro.assembly import Assembler, ElementIntegrator, Material, boundary_load, dump_triplets
from cutvibro.cutcell import ACOUSTIC, CUT, SOLID
from cutvibro.mesh import Mesh


def test_material_derived_values():
    mat = Material()
    w1, w2 = 2 * np.pi * 1600, 2 * np.pi * 2200
    assert mat.K_a == pytest.approx(1.21 * 343**2)
    assert mat.alpha_d == pytest.approx(2 * 0.1 * w1 * w2 / (w1 + w2))
    assert mat.beta_d == pytest.approx(2 * 0.1 / (w1 + w2))
    # Rayleigh damping ratio hits zeta at both anchor frequencies
    for w in (w1, w2):
        assert 0.5 * (mat.alpha_d / w + mat.beta_d * w) == pytest.approx(0.1)


def test_reference_solid_blocks():
    h = 0.01
    mat = Material()
    integ = ElementIntegrator(mat, h)
    Ks, Ms = integ.ref_solid
    assert np.allclose(Ks, Ks.T) and np.allclose(Ms, Ms.T)
    # total mass of each displacement component
    assert Ms[0::2, 0::2].sum() == pytest.approx(mat.rho_s * h * h)
    # three rigid-body modes
    ev = np.linalg.eigvalsh(Ks)
    assert (np.abs(ev) < 1e-8 * ev.max()).sum() == 3


def test_reference_acoustic_blocks():
    h = 0.01
    mat = Material()
    Ka, Ma = ElementIntegrator(mat, h).ref_acoustic
    assert Ma.sum() == pytest.approx(h * h / mat.K_a)
    assert np.allclose(Ka @ np.ones(4), 0.0, atol=1e-14)
    # linear field p = x: energy (1/rho) * |grad p|^2 * area
    p = np.array([0.0, h, h, 0.0])
    assert p @ Ka @ p == pytest.approx(h * h / mat.rho_a)


def test_uncut_phase_scaling():
    mat = Material()
    integ = ElementIntegrator(mat, 0.01)
    s, a = integ.uncut(SOLID), integ.uncut(ACOUSTIC)
    assert np.allclose(s.Ka, mat.alpha_void * a.Ka)
    assert np.allclose(a.Ks, mat.alpha_void * s.Ks)
    assert not s.S.any() and not a.S.any()


def test_nearly_solid_cut_element_approaches_solid():
    mat = Material()
    integ = ElementIntegrator(mat, 0.01)
    b = integ.blocks(np.array([1.0, 1.0, 1.0, -1e-9]))
    ref = integ.uncut(SOLID)
    assert np.allclose(b.Ks, ref.Ks, rtol=1e-6, atol=1e-6 * np.abs(ref.Ks).max())
    assert np.allclose(b.Ms, ref.Ms, rtol=1e-6, atol=1e-12)


def test_coupling_integral_horizontal_cut():
    # solid above the midline, n_s = (0, -1); S^T u with u_y = 1, p = 1 gives -h
    h = 0.02
    integ = ElementIntegrator(Material(), h)
    b = integ.blocks(np.array([-1.0, -1.0, 1.0, 1.0]))
    u = np.zeros(8)
    u[1::2] = 1.0
    assert u @ b.S @ np.ones(4) == pytest.approx(-h)
    u[:] = 0.0
    u[0::2] = 1.0
    assert u @ b.S @ np.ones(4) == pytest.approx(0.0, abs=1e-15)


def test_coupling_signs_give_real_spectrum():
    # a soft clamped plate across the duct: consistent coupling makes the
    # undamped pencil (K, M) have a real spectrum; flipping S does not
    mesh = Mesh.duct(0.01, 0.04, 0.08, 0.04, 0.05)
    asm = Assembler(mesh, Material(E=5e4, rho_s=10.0))
    x = mesh.coords[:, 0]
    s_bar = 0.0125 - np.abs(x - 0.083)
    s_bar[~mesh.design_node_mask] = -0.01
    results = []
    for flip in (False, True):
        Ms, _, Ks, kinds = asm.element_stack(s_bar)
        if flip:
            Ks[:, :8, 8:] *= -1
        M = asm.apply_dirichlet(asm.scatter(Ms), 1.0).toarray()
        K = asm.apply_dirichlet(asm.scatter(Ks), 1.0).toarray()
        w = sl.eigvals(K, M)
        keep = np.abs(w) < 1e9
        results.append((np.abs(w.imag) / np.abs(w))[keep].max())
    assert (kinds == CUT).any() and (kinds == SOLID).any()
    assert results[0] < 1e-8
    assert results[1] > 1e-3


def test_boundary_integrals(small_mesh, small_asm):
    mesh = small_mesh
    w = small_asm.outlet[2 * mesh.n_nodes :]
    out_nodes = mesh.node_id(mesh.nx, np.arange(mesh.ny + 1))
    assert w.sum() == pytest.approx(mesh.height)
    p = np.zeros(mesh.n_nodes)
    p[out_nodes] = mesh.coords[out_nodes, 1] / mesh.height
    assert p @ w == pytest.approx(0.5 * mesh.height)
    g = small_asm.g[2 * mesh.n_nodes :]
    mat = small_asm.mat
    assert g.sum() == pytest.approx(2 / (mat.rho_a * mat.c_a) * mesh.height)
    assert np.array_equal(np.flatnonzero(g), np.sort(mesh.node_id(0, np.arange(mesh.ny + 1))))


def test_boundary_load_zero_field():
    edges = np.array([[0, 1], [1, 2]])
    assert boundary_load(edges, 3, 0.5) @ np.zeros(3) == 0.0


def test_absorbing_damping_only_on_boundary_pressures(small_mesh, small_asm):
    C = small_asm.C_abs.tocoo()
    off = 2 * small_mesh.n_nodes
    nodes = set(small_mesh.inlet_edges.ravel()) | set(small_mesh.outlet_edges.ravel())
    assert set((C.row - off).tolist()) == nodes
    mat = small_asm.mat
    assert C.sum() == pytest.approx(2 * small_mesh.height / (mat.rho_a * mat.c_a))


def test_dirichlet_rows(small_mesh, small_asm):
    s_bar = np.full(small_mesh.n_nodes, 0.3 * small_mesh.h)
    sysm = small_asm.assemble(s_bar)
    d = small_mesh.clamped_dofs
    K = sysm.K.tocsr()
    for A in (sysm.K, sysm.M):
        sub = A.tocsr()[d]
        assert np.allclose(sub.toarray(), np.eye(A.shape[0])[d])
    assert abs(sysm.C.tocsr()[d]).sum() == 0
    assert K.shape == (small_mesh.n_dofs, small_mesh.n_dofs)


def test_global_assembly_matches_dense_loop(small_mesh, small_asm, rng):
    s_bar = rng.uniform(-1, 1, small_mesh.n_nodes) * small_mesh.h
    sysm = small_asm.assemble(s_bar)
    phi = small_asm.corner_values(s_bar)
    K = np.zeros((small_mesh.n_dofs,) * 2)
    for e in range(small_mesh.n_elements):
        _, _, Ke = small_asm.integ.element(phi[e])
        idx = small_asm.edofs[e]
        K[np.ix_(idx, idx)] += Ke
    free = ~small_asm.clamped
    assert np.allclose(sysm.K.toarray()[np.ix_(free, free)], K[np.ix_(free, free)])


def test_dump_triplets(tmp_path, small_asm, small_mesh):
    sysm = small_asm.assemble(np.full(small_mesh.n_nodes, -small_mesh.h / 2))
    path = tmp_path / "K.csv"
    dump_triplets(sysm.K, path)
    data = np.loadtxt(path, delimiter=",")
    assert data.shape[0] == sysm.K.nnz
    assert data[:, 2].sum() == pytest.approx(sysm.K.sum())


def test_tessellation_snap_in_assembly(small_asm):
    # exact zeros are snapped before classification
    phi = small_asm.corner_values(np.zeros(small_asm.mesh.n_nodes))
    assert (cutcell.classify(phi) == SOLID).all()
