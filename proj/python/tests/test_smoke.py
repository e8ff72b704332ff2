import json
import math
import pathlib
import subprocess

import pytest

import ncc

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_registry_lists_builtins():
    assert ncc.registered("task") == ["completion", "summarization", "retrieval"]
    assert "bleu" in ncc.registered("metric")
    with pytest.raises(ncc.NccError):
        ncc.registered("widget")


def test_tokenizers():
    assert ncc.space_tokenize("def  f(x):") == ["def", "f(x):"]
    merges = ncc.bpe_train({"low": 5, "lower": 2, "newest": 6, "widest": 3}, 1)
    assert merges == [("e", "s")]
    assert ncc.bpe_encode("newest", merges) == ["n", "e", "w", "es", "t", "</w>"]
    with pytest.raises(ncc.NccError):
        ncc.bpe_train({}, 3)


def test_synparse():
    kinds = [k for k, *_ in ncc.lex("def f():\n  return 1")]
    assert kinds.count("indent") == kinds.count("dedent") == 1
    assert ncc.linearize("x = 1") == ["x", "=", "1", "<NEWLINE>"]
    with pytest.raises(ncc.NccError, match="DedentMismatch"):
        ncc.lex("if x:\n    y\n  z")


def test_metrics():
    assert ncc.mrr([1, 2, None]) == 0.5
    assert ncc.bleu([["the", "cat"]], [["the", "cat", "sat"]], max_n=2) == pytest.approx(math.exp(-0.5))
    p, r, f = ncc.rouge_l(["a", "c", "d"], ["a", "b", "c", "d"])
    assert (p, r) == (1.0, 0.75)
    assert f == pytest.approx(0.857143, abs=1e-6)


def test_ngram():
    model = ncc.NgramModel.train([[0, 1, 0, 1, 0, 2]], 2, 0.7, 3)
    dist = model.next_distribution([0])
    assert dist[1] == pytest.approx(0.7 * 2 / 3 + 0.3 * (0.7 * 2 / 6 + 0.3 / 3))
    assert sum(dist) == pytest.approx(1.0)
    assert model.count([0], 1) == 2


def test_predictor_round_trip(tmp_path):
    config = json.loads((ROOT / "configs" / "completion_ngram.json").read_text())
    for split in ("train", "valid", "test"):
        config["data"][split] = str(ROOT / "data" / "toy" / "bigram.jsonl")
    config["data"]["data_dir"] = str(tmp_path / "data-bin")
    config["checkpoint"]["save_dir"] = str(tmp_path / "model")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    binary = ROOT / "build" / "ncc"
    if not binary.exists():
        pytest.skip("ncc binary not built")
    for step in ("preprocess", "train"):
        subprocess.run([str(binary), step, "-c", str(cfg)], check=True, capture_output=True)
    predictor = ncc.load_predictor(tmp_path / "model")
    assert predictor.task == "completion"
    (token, prob), *_ = predictor.complete("a", 3)
    assert token == "b" and 0.5 < prob < 0.6
    with pytest.raises(ncc.NccError):
        predictor.search("anything", 1)
    with pytest.raises(ncc.NccError):
        ncc.load_predictor(tmp_path / "missing")
