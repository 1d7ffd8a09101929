import json

import numpy as np
import pytest

import ose

ROBERTA_MAX = ose.ArchParams(24, 16, 1024, 4096)


def test_param_counts():
    assert ose.param_count(ROBERTA_MAX) == 355_361_792
    bert = ose.EmbeddingConfig(vocab=28996, typepos=512)
    assert ose.param_count(ose.ArchParams(12, 12, 768, 3072), bert) == 108_311_040
    tiny = ose.EmbeddingConfig(vocab=1, typepos=1)
    assert ose.param_count(ose.ArchParams(2, 1, 1, 1), tiny) == 41
    assert ose.embedding_params(ROBERTA_MAX) == 52_000_768


def test_flop_count():
    assert ose.flop_count(ose.ArchParams(4, 8, 1024, 768)) == 62_635_008
    assert ose.flop_count(ose.ArchParams(2, 1, 1, 1)) == 30


def test_validate_and_enumerate():
    assert ose.validate(ose.ArchParams(4, 8, 1024, 768)) == []
    assert "depth must be even" in ose.validate(ose.ArchParams(3, 8, 512, 256))[0]
    grid = ose.default_grid()
    assert len(grid) == 300
    assert grid == sorted(grid)
    assert ose.enumerate([4], [8], [1024], [768]) == [ose.ArchParams(4, 8, 1024, 768)]
    with pytest.raises(ose.ConfigError):
        ose.param_count(ose.ArchParams(3, 8, 512, 256))


def test_w_coefficient():
    assert ose.w_coefficient(50, 5, 0.5, 100, 10) == pytest.approx(0.5)
    assert ose.w_coefficient(100, 10, 0.7, 100, 10) == 0.0
    with pytest.raises(ose.DataError):
        ose.w_coefficient(50, 5, 0.0, 100, 10)


def test_rank():
    report = ose.rank(json.dumps({"epsilon": 1}), ["top_k=5"])
    assert len(report["ranked"]) == 5
    assert report["provenance"]["candidates"] == 300
    ws = [row["w"] for row in report["ranked"]]
    assert ws == sorted(ws, reverse=True)
    assert ose.rank_json('{"epsilon": 1}') == ose.rank_json('{"epsilon": 1}')
    with pytest.raises(ose.ConfigError):
        ose.rank('{"nonsense": 1}')


def test_toy_forward_and_losses():
    arch = ose.ArchParams(2, 2, 8, 16)
    emb = ose.EmbeddingConfig(vocab=32, typepos=16, seq=8, batch=1)
    out = ose.toy_forward(arch, emb, 3, [list(range(8)), list(range(8, 16))])
    assert len(out) == 2
    assert out[0].shape == (8, 8)
    assert np.all(np.abs(out[0]) <= 1.0)
    with pytest.raises(ose.DataError):
        ose.toy_forward(arch, emb, 3, [[99] * 8])
    assert ose.gelu(1.0) == pytest.approx(0.9096457583464344, abs=1e-12)
    logits = np.array([[1.3, -0.4]])
    assert ose.kd_loss(logits, logits, 0.0) > 0.0


def test_verify():
    results = ose.verify()
    assert len(results) == 9
    assert all(passed for _, passed, _ in results)
