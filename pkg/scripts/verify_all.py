"""
Batch job: run every verification suite, write one CSV per suite plus a
PDF summary, and exit non-zero if any suite failed or crashed.

    python scripts/verify_all.py [output_dir] [--quick]
"""
import logging
import os
import sys
from dataclasses import replace

import pandas as pd

# Ensure we can import from app
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from app.errors import DiscriminationError
from app.report import generate_pdf_report
from app.utils import frame_text, write_text
from app.verify import SUITES, SuiteOptions, run_suite

logger = logging.getLogger("verify_all")

# Smaller grids for a smoke run
QUICK = SuiteOptions(samples=50, kmax=20, alpha_points=201, grid=3, tuples=1000, angle_resolution=180, refine_iters=2)


def run_all(output_dir, options):
    os.makedirs(output_dir, exist_ok=True)
    frames, status = {}, {}

    for name in SUITES:
        logger.info("Processing %s...", name)
        try:
            result = run_suite(name, options)
        except DiscriminationError as e:
            logger.error("Suite %s failed to run: %s", name, e)
            status[name] = f"ERROR ({e.reason})"
            continue

        frames[name] = result.frame
        status[name] = "PASS" if result.ok else "FAIL"
        write_text(frame_text(result.frame), os.path.join(output_dir, f"{name}.csv"))

    summary = pd.DataFrame([{"suite": k, "status": v} for k, v in status.items()])
    write_text(frame_text(summary), os.path.join(output_dir, "summary.csv"))

    pdf = generate_pdf_report("Full verification run", frames, status)
    with open(os.path.join(output_dir, "report.pdf"), "wb") as fh:
        fh.write(pdf)

    return all(v == "PASS" for v in status.values())


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:]
    options = QUICK if "--quick" in argv else SuiteOptions()
    paths = [a for a in argv if not a.startswith("--")]
    output_dir = paths[0] if paths else "verification"

    logger.info("Starting verification run into %s", output_dir)
    ok = run_all(output_dir, replace(options, workers=os.cpu_count() or 1))
    logger.info("Verification run complete: %s", "all suites passed" if ok else "failures found")
    sys.exit(0 if ok else 1)
