import json
import math

import pytest

from graph_infill.report import SCHEMA, SCHEMA_VERSION, EvalReport, ReportError


def sample(**kw):
    base = dict(label="AmGCL", recall_at={10: 0.2, 20: 0.3}, ndcg_at={10: 0.4, 20: 0.41},
                ndcg_full_at={10: 0.1, 20: 0.2}, accuracy_folds=[0.8, 0.9, 0.85, 0.8, 0.9],
                accuracy_mean=0.85, config_echo={"probe": {"folds": 5}}, seed=3,
                wall_time_s=1.5, param_count=1234, extra={"best_epoch": 12})
    return EvalReport(**{**base, **kw})


def test_round_trip(tmp_path):
    r = sample()
    path = tmp_path / "r.json"
    r.save(path)
    doc = json.loads(path.read_text())
    assert doc["schema"] == SCHEMA and doc["schema_version"] == SCHEMA_VERSION
    assert doc["recall_at"] == {"10": 0.2, "20": 0.3}
    back = EvalReport.load(path)
    assert back == r
    assert back.metric_values() == r.metric_values()


@pytest.mark.parametrize("kw", [
    dict(recall_at={10: 1.5}), dict(ndcg_at={10: -0.1}), dict(accuracy_mean=2.0),
    dict(accuracy_folds=[0.5, 0.5]),
])
def test_validation(kw):
    with pytest.raises(ReportError):
        sample(**kw)


def test_nan_allowed_for_unscorable():
    r = sample(recall_at={10: math.nan})
    assert math.isnan(r.recall_at[10])


def test_rejects_other_documents():
    d = sample().to_dict()
    with pytest.raises(ReportError, match="version"):
        EvalReport.from_dict({**d, "schema_version": 99})
    with pytest.raises(ReportError, match="not an evaluation report"):
        EvalReport.from_dict({**d, "schema": "something-else"})
