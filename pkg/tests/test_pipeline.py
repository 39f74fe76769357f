from isps_engine.agents.invariant_set_pipeline import InvariantSetPipelineAgent


def test_linear_system_runs_through_the_construction(linear, small_budget):
    report = InvariantSetPipelineAgent(small_budget).run(linear)
    assert report["system"] == "linear"
    assert report["verdict"] != "falsified"
    assert report["legs"]["lipschitz"]["status"] == "consistent"
    assert report["legs"]["isps"]["status"] == "consistent"
    assert report["certificate"]["form"] == "isps"


def test_integrator_stops_at_the_certificate(integrator, small_budget):
    report = InvariantSetPipelineAgent(small_budget).run(integrator)
    assert report["verdict"] == "falsified"
    assert report["stopped_at"] == "isps"
    assert report["legs"]["isps"]["witness"]["kind"] == "growth"
    assert "certificate" not in report
