import json
import math

import numpy as np
import pytest

import gmcf


def config(**kwargs):
    return json.dumps(kwargs)


FLAT1 = {"geometry": {"kind": "flat_cn", "params": {"n": 1}}}
COTANGENT = {
    "geometry": {
        "kind": "cotangent_bundle",
        "base": {"kind": "torus_of_revolution", "params": {"a": 2.0, "b": 0.5}},
    }
}


def test_flat_geometry_basics():
    geo = gmcf.build_geometry(config(**FLAT1))
    assert geo.dim == 2
    g = geo.metric([0.3, -0.4])
    assert np.allclose(g, np.eye(2))
    j = geo.complex_structure([0.0, 0.0])
    assert np.allclose(j @ j, -np.eye(2))
    w = geo.omega([1.0, 2.0])
    assert np.allclose(w, -w.T)
    assert np.allclose(geo.christoffels([0.1, 0.2]), 0.0)


def test_cotangent_structure_and_einstein():
    geo = gmcf.build_geometry(config(**COTANGENT))
    assert geo.dim == 4
    rep = geo.check(points=10, seed=7)
    assert rep["structure_pass"]
    assert rep["connection_pass"]
    assert abs(rep["einstein_f"]) < 1e-6
    assert rep["einstein_residual"] < 1e-6
    t = geo.torsion([1.2, 0.5, 0.4, -0.3])
    assert np.max(np.abs(t)) > 1e-4  # genuinely torsion-full
    rho = geo.ricci_form([1.2, 0.5, 0.4, -0.3])
    assert np.max(np.abs(rho)) < 1e-8


def test_initial_grid_and_diagnostics():
    cfg = dict(COTANGENT)
    cfg["initial"] = {
        "kind": "graph_of_one_form",
        "params": {"c1": 0.04, "c2": 0.02, "pot_amp": 0.02, "pot_mix": 0.012},
    }
    cfg["resolution"] = [24, 24]
    geo = gmcf.build_geometry(config(**cfg))
    grid = gmcf.build_initial(geo, config(**cfg))
    assert grid.shape == [24, 24]
    pts = grid.points()
    assert pts.shape == (24 * 24, 4)
    diag = grid.diagnostics()
    assert diag["eta_margin"] > 0.9
    assert diag["max_pullback_omega"] < 1e-3


def test_circle_flow_matches_the_shrinking_law():
    cfg = {
        **FLAT1,
        "initial": {"kind": "circle", "params": {"r": 1.0}},
        "resolution": [96],
        "flow": {"t_end": 0.1, "integrator": "rk4", "cfl": 0.2},
    }
    out = gmcf.run_flow(config(**cfg))
    assert out["termination"] == "reached_t_end"
    pts = out["final_points"]
    radii = np.hypot(pts[:, 0], pts[:, 1])
    assert np.allclose(radii, math.sqrt(1.0 - 0.2), rtol=1e-3)
    ts = [r["t"] for r in out["records"]]
    assert ts == sorted(ts)
    vols = [r["volume"] for r in out["records"]]
    assert vols[-1] < vols[0]


def test_identity_suite_passes_and_fails_as_expected():
    cfg = {
        "geometry": {"kind": "flat_cn", "params": {"n": 2}},
        "initial": {"kind": "product_torus", "params": {"r1": 1.0, "r2": 1.0}},
        "resolution": [16, 16],
        "suite_samples": 12,
        "seed": 3,
    }
    rows = gmcf.run_identities(config(**cfg))
    assert len(rows) == 12
    assert all(r["pass"] for r in rows)

    broken = {
        "geometry": {
            "kind": "flat_cn",
            "params": {"n": 2, "perturb_connection": 0.01},
        },
        "suite_samples": 12,
    }
    rows = gmcf.run_identities(config(**broken))
    failed = {r["name"] for r in rows if not r["pass"]}
    assert "symplectic_parallel" in failed
    assert "bianchi_torsion" in failed


def test_config_errors_are_python_exceptions():
    with pytest.raises(gmcf.ConfigError):
        gmcf.build_geometry("{ not json")
    with pytest.raises(gmcf.SpecError):
        gmcf.build_geometry(config(geometry={"kind": "flat_cn", "params": {"n": 9}}))
