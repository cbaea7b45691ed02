"""Shared helpers: synthetic corpora, pipeline trees, and a CLI runner."""

from __future__ import annotations

import contextlib
import io
import json
from pathlib import Path

from domainport.cli import main as cli_main
from domainport.corpus import Corpus, TokenizerConfig, parse_plaintext

# varied wording so the three similarity measures spread out across targets
SOURCE_TEXT = """\
the committee approved the annual budget
parliament debated the new labour law
the minister announced a budget reform
"""

TARGET_TEXTS = {
    "news": """\
the committee rejected the annual budget
the parliament passed a labour reform
ministers announced new spending plans
""",
    "social": """\
omg the new phone drops tomorrow
cant wait for the weekend tbh
this game is so laggy today
""",
    "science": """\
the enzyme catalyzes the hydrolysis reaction
we measured protein expression in mutant cells
results indicate a significant binding affinity
""",
}


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    """Invoke the CLI in-process, capturing exit code, stdout and stderr."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli_main(argv)
    return code, out.getvalue(), err.getvalue()


def make_corpus(
    text: str,
    domain_id: str = "corpus",
    config: TokenizerConfig | None = None,
) -> Corpus:
    return parse_plaintext(text, config, domain_id=domain_id, source="<test>")


def write_pipeline_tree(root: Path, *, seed: int = 42, dimension: int = 32) -> Path:
    """Lay out corpora, a score table, and a config file under ``root``.

    Returns the config path. The tree has one source corpus and three
    targets with dataset/split join keys, plus two systems scored on
    all four, so every stage of the pipeline has work to do.
    """
    corpora_dir = root / "corpora"
    corpora_dir.mkdir(parents=True, exist_ok=True)
    (corpora_dir / "src.txt").write_text(SOURCE_TEXT, encoding="utf-8")
    for name, text in TARGET_TEXTS.items():
        (corpora_dir / f"{name}.txt").write_text(text, encoding="utf-8")

    scores = ["system,task,dataset,split,score"]
    table = {
        "alpha-sys": {"src": 95.0, "news": 88.0, "social": 52.0, "science": 61.0},
        "beta-sys": {"src": 90.0, "news": 80.0, "social": 45.0, "science": 57.0},
    }
    for system, per_dataset in table.items():
        for dataset, score in per_dataset.items():
            split = "train" if dataset == "src" else "test"
            scores.append(f"{system},toy,{dataset},{split},{score}")
    (root / "scores.csv").write_text("\n".join(scores) + "\n", encoding="utf-8")

    config = {
        "out_dir": "out",
        "embedding": {"dimension": dimension, "seed": seed},
        "corpora": [
            {"domain_id": "src", "path": "corpora/src.txt", "format": "text",
             "dataset": "src", "split": "train"},
            {"domain_id": "news", "path": "corpora/news.txt", "format": "text",
             "dataset": "news", "split": "test"},
            {"domain_id": "social", "path": "corpora/social.txt", "format": "text",
             "dataset": "social", "split": "test"},
            {"domain_id": "science", "path": "corpora/science.txt", "format": "text",
             "dataset": "science", "split": "test"},
        ],
        "scores": {"path": "scores.csv", "metric": "F1"},
        "transport": {
            "task": "toy",
            "source": ["src", "train"],
            "targets": [
                {"dataset": "news", "split": "test", "group": "near"},
                {"dataset": "social", "split": "test", "group": "far"},
                {"dataset": "science", "split": "test", "group": "far"},
            ],
        },
        "similarity": {"source": "src"},
        "fit": {"predictors": ["lexical", "cosine", "kl"]},
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return config_path


def run_full_pipeline(config_path: Path, out_dir: str | None = None) -> None:
    """Run every stage, asserting each exits 0."""
    extra = ["--out", out_dir] if out_dir is not None else []
    for stage in ("ingest", "similarity", "transport", "fit", "report"):
        code, out, err = run_cli([stage, "--config", str(config_path), *extra])
        assert code == 0, f"{stage} failed ({code}): {out} {err}"
