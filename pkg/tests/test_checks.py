from graffopt import checks


def test_report_structure():
    report = checks.run_checks("coords", seed=1, cases=25)
    assert report["passed"] and report["failed"] == []
    (suite,) = report["suites"]
    names = {p["name"] for p in suite["properties"]}
    assert {"random_point_feasible", "stiefel_projection_roundtrip"} <= names


def test_seeded_reports_repeat():
    a = checks.run_checks("geom_stiefel", seed=4, cases=15)
    b = checks.run_checks("geom_stiefel", seed=4, cases=15)
    assert a == b


def test_property_without_samples_is_skipped():
    p = checks.Property("x", 1e-10)
    d = p.as_dict()
    assert d["skipped"] and d["passed"]
    p.add(float("inf"))
    d = p.as_dict()
    assert not d["passed"] and d["max_residual"] is None


def test_perturbation_names_failures():
    report = checks.run_checks("geometry", seed=0, cases=10, perturb=1e-3)
    assert not report["passed"]
    assert "geom_projection.point_idempotency" in report["failed"]
