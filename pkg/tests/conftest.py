import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from bsdverify.curve import WeierstrassModel

settings.register_profile(
    "repo", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

CORPUS_PATH = Path(__file__).resolve().parents[1] / "src" / "bsdverify" / "data" / "corpus.jsonl"
CORPUS = [json.loads(line) for line in CORPUS_PATH.read_text().splitlines() if line.strip()]
BY_LABEL = {r["label"]: WeierstrassModel(*r["ainvs"]) for r in CORPUS}
BY_LABEL["5077a1"] = WeierstrassModel(0, 0, 1, -7, 6)
RANK_ONE = [r["label"] for r in CORPUS if r["rank"] == 1]


@pytest.fixture
def curves():
    return BY_LABEL


@pytest.fixture
def e37():
    return BY_LABEL["37a1"]


@pytest.fixture
def e11():
    return BY_LABEL["11a1"]


@pytest.fixture
def e43():
    return BY_LABEL["43a1"]
