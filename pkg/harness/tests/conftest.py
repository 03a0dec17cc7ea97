from pathlib import Path

import pytest

from stex_harness.data import read_training_lines
from stex_harness.train import TrainingConfig, finetune

DATA = Path(__file__).parent / "data"

# reaches 10/10 exact recall on ten lines within the 200-step cap
OVERFIT_CONFIG = dict(epochs=200, batch_size=10, max_steps=200,
                      n_embd=160, learning_rate=5e-3, seed=0)


@pytest.fixture(scope="session")
def train_2k():
    return DATA / "train_2k.txt"


@pytest.fixture(scope="session")
def ten_lines(train_2k):
    return read_training_lines(train_2k)[:10]


@pytest.fixture(scope="session")
def small_checkpoint(tmp_path_factory, ten_lines):
    """A model overfit on ten lines; shared by protocol and overfit tests."""
    tmp = tmp_path_factory.mktemp("ckpt")
    train_file = tmp / "ten.txt"
    train_file.write_text("\n".join(ten_lines) + "\n")
    cfg = TrainingConfig.tiny(**OVERFIT_CONFIG)
    losses = finetune(train_file, cfg, tmp / "model", log=lambda m: None)
    return tmp / "model", losses
