import pytest

from upstage.vnv.campaign import CampaignResult, SampleRecord
from upstage.vnv.monitors import Monitor
from upstage.vnv.report import generate_report, rollup_status
from upstage.vnv.requirements import (CycleDetected, DanglingMonitorRef,
                                      DuplicateId, Requirement, build_tree,
                                      parse_requirements)

REQ_TOML = """
[[requirement]]
id = "R1"
text = "stage attitude stays controlled"
verify_by = ["m_rate"]

[[requirement]]
id = "R1.1"
parent = "R1"
text = "nutation bounded during coast"
verify_by = ["m_nut"]

[[requirement]]
id = "R2"
text = "propulsion margins"
verify_by = []
"""


def write_req(tmp_path, text=REQ_TOML):
    p = tmp_path / "demo.req"
    p.write_text(text)
    return p


def monitor(mid, reqs=()):
    return Monitor(id=mid, kind="threshold", signal="w_mag",
                   requirements=tuple(reqs))


def campaign_with(verdicts: dict) -> CampaignResult:
    sample = SampleRecord(index=0, seed=1, params={}, objective=0.0,
                          status="ok", monitor_verdicts=verdicts)
    return CampaignResult(kind="mc", n=1, master_seed=1, objective="x",
                          duration=1.0, samples=[sample], best_index=0)


class TestParse:
    def test_tree_structure(self, tmp_path):
        tree = parse_requirements(write_req(tmp_path))
        assert tree.roots == ["R1", "R2"]
        assert tree.nodes["R1"].children == ["R1.1"]
        assert tree.nodes["R1.1"].verify_by == ["m_nut"]

    def test_duplicate_id_rejected(self):
        with pytest.raises(DuplicateId):
            build_tree([Requirement("A", ""), Requirement("A", "")])

    def test_cycle_detected(self):
        # mutual parents never reach a root
        with pytest.raises(CycleDetected):
            build_tree([Requirement("A", "", parent="B"),
                        Requirement("B", "", parent="A")])

    def test_walk_depth_first_order(self, tmp_path):
        tree = parse_requirements(write_req(tmp_path))
        order = [r.id for r, _ in tree.walk_depth_first()]
        assert order == ["R1", "R1.1", "R2"]


class TestRollup:
    def tree(self, tmp_path):
        return parse_requirements(write_req(tmp_path))

    def test_both_passing_parent_derives_from_child(self, tmp_path):
        status = rollup_status(self.tree(tmp_path),
                               {"m_rate": True, "m_nut": True})
        assert status["R1.1"] == "pass"
        assert status["R1"] == "pass"

    def test_child_fails_root_fails_despite_own_monitor_pass(self, tmp_path):
        status = rollup_status(self.tree(tmp_path),
                               {"m_rate": True, "m_nut": False})
        assert status["R1.1"] == "fail"
        assert status["R1"] == "fail"

    def test_empty_verify_by_is_unverified(self, tmp_path):
        status = rollup_status(self.tree(tmp_path),
                               {"m_rate": True, "m_nut": True})
        assert status["R2"] == "unverified"

    def test_unevaluated_monitor_gives_unverified(self, tmp_path):
        status = rollup_status(self.tree(tmp_path), {"m_nut": True})
        assert status["R1"] == "unverified"


class TestReport:
    def test_dangling_monitor_ref_raises(self, tmp_path):
        tree = parse_requirements(write_req(tmp_path))
        with pytest.raises(DanglingMonitorRef):
            generate_report(tree, {"mc": campaign_with({"m_rate": True})},
                            [monitor("m_rate", ["R1"])])

    def test_coverage_matrix_lists_each_monitor_once_per_campaign(self, tmp_path):
        tree = parse_requirements(write_req(tmp_path))
        monitors = [monitor("m_rate", ["R1"]), monitor("m_nut", ["R1.1"])]
        campaigns = {"mc": campaign_with({"m_rate": True, "m_nut": True}),
                     "ce": campaign_with({"m_rate": True, "m_nut": False})}
        report = generate_report(tree, campaigns, monitors)
        for mid in ("m_rate", "m_nut"):
            for cname in ("mc", "ce"):
                rows = [r for r in report.coverage_rows
                        if r[1] == mid and r[2] == cname]
                assert len(rows) == 1

    def test_gap_section_lists_unverified(self, tmp_path):
        tree = parse_requirements(write_req(tmp_path))
        monitors = [monitor("m_rate", ["R1"]), monitor("m_nut", ["R1.1"])]
        report = generate_report(tree, {"mc": campaign_with(
            {"m_rate": True, "m_nut": True})}, monitors)
        assert report.gaps == ["R2"]
        assert "R2: no monitors attached" in report.document

    def test_two_way_link_mismatch_reported(self, tmp_path):
        tree = parse_requirements(write_req(tmp_path))
        # m_rate does not declare R1 back
        monitors = [monitor("m_rate"), monitor("m_nut", ["R1.1"])]
        report = generate_report(tree, {"mc": campaign_with(
            {"m_rate": True, "m_nut": True})}, monitors)
        assert any("m_rate does not declare" in n for n in
                   report.document.splitlines())

    def test_document_and_table_render(self, tmp_path):
        tree = parse_requirements(write_req(tmp_path))
        monitors = [monitor("m_rate", ["R1"]), monitor("m_nut", ["R1.1"])]
        report = generate_report(tree, {"mc": campaign_with(
            {"m_rate": True, "m_nut": False})}, monitors)
        assert report.status == {"R1": "fail", "R1.1": "fail",
                                 "R2": "unverified"}
        assert "| R1.1 | m_nut | mc | fail |" in report.document
        assert report.table.splitlines()[0] == "requirement,monitor,campaign,verdict"
