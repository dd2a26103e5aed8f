"""End-to-end surrogate detection: build a labeled corpus, train the
residual classifier, and run the two-stage pipeline.

Run: python demos/04_train_and_detect.py
"""

import json
import tempfile
from pathlib import Path

from mpfscope import cli

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    corpus = tmp / "corpus"

    # one corpus per regime, merged into a single labeled manifest
    cli.main(["synth", "--regime", "decoder", "--count", "30", "--seed", "1",
              "--out", str(corpus)])
    cli.main(["synth", "--regime", "physics", "--count", "30", "--seed", "1",
              "--out", str(tmp / "phys")])
    main_manifest = json.loads((corpus / "corpus.json").read_text())
    phys_manifest = json.loads((tmp / "phys" / "corpus.json").read_text())
    for entry in phys_manifest["sequences"]:
        (corpus / entry["file"]).write_bytes(
            (tmp / "phys" / entry["file"]).read_bytes())
    main_manifest["sequences"] += phys_manifest["sequences"]
    (corpus / "corpus.json").write_text(json.dumps(main_manifest, indent=2,
                                                   sort_keys=True) + "\n")

    print("== training the microscope classifier ==")
    cli.main(["train", "--corpus", str(corpus / "corpus.json"),
              "--out", str(tmp / "model.json"), "--seed", "0"])

    print("\n== two-stage pipeline over the whole corpus ==")
    inputs = [str(corpus / e["file"]) for e in main_manifest["sequences"]]
    cli.main(["detect", "--pipeline", "--frames", *inputs,
              "--model", str(tmp / "model.json"),
              "--out", str(tmp / "pred.json"), "--jobs", "4"])
    pred = json.loads((tmp / "pred.json").read_text())
    verdicts = [r["final"] for r in pred["results"]]
    print(f"verdicts: {verdicts.count('AI')} AI / {verdicts.count('Real')} Real "
          f"over {len(verdicts)} sequences")

    print("\n== scoring against ground truth ==")
    cli.main(["eval", "--pred", str(tmp / "pred.json"),
              "--truth", str(corpus / "corpus.json"),
              "--report", str(tmp / "report.json"),
              "--csv", str(tmp / "report.csv")])
