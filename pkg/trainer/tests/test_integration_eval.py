"""Cross-package integration: the evaluation harness consumes the served
student purely through the HTTP model-client contract.

Skipped when the pipeline package is not installed alongside the trainer.
"""

from __future__ import annotations

import pytest

rumordistill = pytest.importorskip("rumordistill")

from rumordistill.clients import StudentServerClient  # noqa: E402
from rumordistill.evaluation import compute_metrics  # noqa: E402
from rumordistill.labels import PARSE_FAILURE, extract_label  # noqa: E402
from rumordistill.models import StandardLabel  # noqa: E402

from conftest import smoke_records  # noqa: E402
from distill_trainer.config import TrainConfig  # noqa: E402
from distill_trainer.data import build_training_corpus  # noqa: E402
from distill_trainer.serve import serve_student  # noqa: E402
from distill_trainer.tokenizer import ByteTokenizer  # noqa: E402
from distill_trainer.train import train  # noqa: E402


@pytest.fixture(scope="module")
def student_server(smoke_corpus_file, tmp_path_factory):
    corpus = build_training_corpus(smoke_corpus_file, ByteTokenizer(), max_seq_len=256)
    config = TrainConfig(base_model_id="tiny-64", learning_rate=1e-3, epochs=50,
                         batch_size=8, seed=0, max_seq_len=256)
    result = train(config, corpus, tmp_path_factory.mktemp("adapter"))
    server = serve_student("tiny-64", result.adapter_dir, port=0, max_new_tokens=120)
    yield server
    server.stop()


def test_harness_scores_the_served_student(student_server):
    client = StudentServerClient(student_server.address)
    held_in = smoke_records(32)[:20]
    golds, preds = [], []
    for record in held_in:
        completion = client.complete(record["instruction_text"], image=None)
        golds.append(StandardLabel.from_surface(record["target_text"]
                                                .split("<label>")[1]
                                                .split("</label>")[0].strip()))
        preds.append(extract_label(completion))
    metrics = compute_metrics(golds, preds)
    assert metrics.n == 20
    assert metrics.parse_failure_rate <= 0.1  # the >= 90% extraction criterion
    assert 0.0 <= metrics.accuracy <= 1.0
